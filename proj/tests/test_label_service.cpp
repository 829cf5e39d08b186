#include <gtest/gtest.h>

#include <thread>

#include "repofind/http_server.hpp"
#include "repofind/label_service.hpp"
#include "repofind/store.hpp"
#include "support.hpp"

using namespace repofind;
using nlohmann::json;

namespace {

struct Service {
    explicit Service(LabelServiceOptions options = {}) : store(":memory:"), service(store, options) {
        store.register_institution(fixture::profile("ucsc"));
        store.register_institution(fixture::profile("ucsd"));
        for (const char* id : {"o/a", "o/b", "o/c"}) {
            auto r = fixture::repo(id, "repo " + std::string(id));
            r.matched_queries = {{"ucsc", SearchAttribute::name, "UCSC"}, {"ucsd", SearchAttribute::name, "UCSD"}};
            store.upsert_repo(r);
        }
    }

    HttpResponse get(const std::string& target, Headers headers = {}) {
        return service.handle({"GET", target, "", std::move(headers)});
    }
    HttpResponse post(const json& body, Headers headers = {}) {
        return service.handle({"POST", "/api/label", body.dump(), std::move(headers)});
    }
    void predict(const std::string& id, double p, ClassifierKind k = ClassifierKind::svm) {
        store.put_prediction({id, "ucsc", k, "tag", p, "", "2025-01-01T00:00:00Z"});
    }

    Store store;
    LabelService service;
};

json body(const HttpResponse& r) { return json::parse(r.body); }

}  // namespace

TEST(LabelService, HealthAndInstitutions) {
    Service s;
    EXPECT_EQ(s.get("/api/health").status, 200);
    s.store.put_label({"o/a", "ucsc", 1, "ann", "t"});
    const auto r = s.get("/api/institutions");
    ASSERT_EQ(r.status, 200);
    const auto list = body(r);
    ASSERT_EQ(list.size(), 2u);
    json ucsc;
    for (const auto& i : list)
        if (i["id"] == "ucsc") ucsc = i;
    EXPECT_EQ(ucsc["labeled_count"], 1);
    EXPECT_EQ(ucsc["unlabeled_count"], 2);
    EXPECT_EQ(r.header("Access-Control-Allow-Origin"), "*");
}

TEST(LabelService, NextPrefersLowestConfidence) {
    Service s;
    s.predict("o/a", 0.2);
    s.predict("o/b", 0.9);
    s.predict("o/c", 0.5);
    const auto r = s.get("/api/next?institution=ucsc&strategy=lowest_confidence");
    ASSERT_EQ(r.status, 200);
    const auto b = body(r);
    EXPECT_EQ(b["repo"]["repo_id"], "o/a");
    EXPECT_EQ(b["strategy"], "lowest_confidence");
    EXPECT_EQ(b["classifier"], "svm");
    EXPECT_EQ(b["remaining"], 3);
    EXPECT_NE(b["definition"].get<std::string>().find("Research Group Affiliation"), std::string::npos);
    EXPECT_EQ(body(s.get("/api/next?institution=ucsc&strategy=highest_confidence"))["repo"]["repo_id"], "o/b");
    EXPECT_EQ(body(s.get("/api/next?institution=ucsc"))["repo"]["repo_id"], "o/a");
}

TEST(LabelService, RandomOrderIsSeeded) {
    Service a, b;
    const auto first = body(a.get("/api/next?institution=ucsc"))["repo"]["repo_id"];
    EXPECT_EQ(body(a.get("/api/next?institution=ucsc&strategy=random"))["strategy"], "random");
    EXPECT_EQ(body(b.get("/api/next?institution=ucsc"))["repo"]["repo_id"], first);
}

TEST(LabelService, LabelingAdvancesQueueUntilEmpty) {
    Service s;
    for (int i = 0; i < 3; ++i) {
        const auto next = s.get("/api/next?institution=ucsc");
        ASSERT_EQ(next.status, 200);
        const std::string id = body(next)["repo"]["repo_id"];
        const auto r = s.post({{"repo_id", id}, {"institution_id", "ucsc"}, {"label", 1}, {"labeler", "ann"}});
        ASSERT_EQ(r.status, 201);
        EXPECT_EQ(body(r)["write"], "inserted");
    }
    EXPECT_EQ(s.get("/api/next?institution=ucsc").status, 204);
    EXPECT_EQ(s.get("/api/next?institution=ucsd").status, 200);
}

TEST(LabelService, RelabelOverwrites) {
    Service s;
    const json l{{"repo_id", "o/a"}, {"institution_id", "ucsc"}, {"label", 1}};
    EXPECT_EQ(body(s.post(l))["labeler"], "anonymous");
    auto again = l;
    again["label"] = 0;
    EXPECT_EQ(body(s.post(again))["write"], "overwritten");
    EXPECT_EQ(s.store.labels("ucsc").size(), 1u);
    EXPECT_EQ(s.store.label_audit().size(), 1u);
}

TEST(LabelService, RejectsBadRequests) {
    Service s;
    EXPECT_EQ(s.get("/api/next").status, 400);
    EXPECT_EQ(s.get("/api/next?institution=nowhere").status, 404);
    EXPECT_EQ(s.get("/api/next?institution=ucsc&strategy=psychic").status, 400);
    EXPECT_EQ(s.get("/api/unknown").status, 404);
    EXPECT_EQ(s.service.handle({"POST", "/api/label", "not json", {}}).status, 400);
    EXPECT_EQ(s.post({{"repo_id", "o/a"}, {"institution_id", "ucsc"}, {"label", 2}}).status, 400);
    EXPECT_EQ(s.post({{"repo_id", "o/a"}, {"institution_id", "ucsc"}, {"label", "1"}}).status, 400);
    EXPECT_EQ(s.post({{"repo_id", "o/a"}, {"label", 1}}).status, 400);
    EXPECT_EQ(s.post({{"repo_id", "o/zzz"}, {"institution_id", "ucsc"}, {"label", 1}}).status, 404);
    EXPECT_EQ(s.post({{"repo_id", "o/a"}, {"institution_id", "nowhere"}, {"label", 1}}).status, 404);
    EXPECT_TRUE(s.store.labels().empty());
    EXPECT_EQ(s.service.handle({"OPTIONS", "/api/label", "", {}}).status, 204);
}

TEST(LabelService, TokenGuardsApi) {
    Service s({"sesame", 42});
    EXPECT_EQ(s.get("/api/health").status, 200);
    EXPECT_EQ(s.get("/api/institutions").status, 401);
    EXPECT_EQ(s.get("/api/institutions", {{"X-Label-Token", "wrong"}}).status, 401);
    EXPECT_EQ(s.get("/api/institutions", {{"X-Label-Token", "sesame"}}).status, 200);
}

TEST(LabelService, ConcurrentPostsOverHttpPersistOnce) {
    Store store(":memory:");
    store.register_institution(fixture::profile("ucsc"));
    for (int i = 0; i < 40; ++i) {
        auto r = fixture::repo("o/r" + std::to_string(i));
        r.matched_queries = {{"ucsc", SearchAttribute::name, "UCSC"}};
        store.upsert_repo(r);
    }
    LabelService service(store);
    HttpServer server([&](const HttpRequest& r) { return service.handle(r); });
    server.bind("127.0.0.1", 0);
    server.start();
    const auto base = "http://127.0.0.1:" + std::to_string(server.port());

    std::vector<std::thread> threads;
    std::atomic<int> created{0};
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            HttplibTransport transport(base);
            for (int i = 0; i < 40; ++i) {
                // Every thread labels every repo; each (repo, labeler) pair is written once.
                const json l{{"repo_id", "o/r" + std::to_string(i)}, {"institution_id", "ucsc"},
                             {"label", i % 2}, {"labeler", "worker" + std::to_string(t)}};
                const auto r = transport.send({"POST", "/api/label", l.dump(), {{"Content-Type", "application/json"}}});
                if (r.status == 201) ++created;
            }
        });
    for (auto& th : threads) th.join();
    server.stop();
    EXPECT_EQ(created.load(), 160);
    EXPECT_EQ(store.labels("ucsc").size(), 160u);
    EXPECT_TRUE(store.label_audit().empty());
}
