#include <gtest/gtest.h>

#include <set>

#include "repofind/ingest.hpp"
#include "repofind/mock.hpp"
#include "repofind/text.hpp"
#include "support.hpp"

using namespace repofind;

namespace {

HttpRequest get(const std::string& target) { return {"GET", target, "", {}}; }

}  // namespace

TEST(MockCorpus, PlantsHalfAffiliated) {
    const auto p = fixture::profile("ucsc");
    const auto c = mock::synthetic_corpus(p, 7, 300);
    ASSERT_EQ(c.repos.size(), 300u);
    const auto truth = c.truth("ucsc");
    ASSERT_EQ(truth.size(), 300u);
    int positives = 0;
    std::set<std::string> ids;
    for (const auto& [id, label] : truth) {
        positives += label;
        ids.insert(id);
    }
    EXPECT_EQ(positives, 150);
    EXPECT_EQ(ids.size(), 300u);
    EXPECT_TRUE(c.truth("ucla").empty());
}

TEST(MockCorpus, SeedDeterminesCorpus) {
    const auto p = fixture::profile("ucsc");
    const auto a = mock::synthetic_corpus(p, 7, 50);
    const auto b = mock::synthetic_corpus(p, 7, 50);
    const auto c = mock::synthetic_corpus(p, 8, 50);
    for (std::size_t i = 0; i < a.repos.size(); ++i) EXPECT_EQ(a.repos[i].summary, b.repos[i].summary);
    bool differs = false;
    for (std::size_t i = 0; i < a.repos.size(); ++i) differs = differs || a.repos[i].summary != c.repos[i].summary;
    EXPECT_TRUE(differs);
}

TEST(MockCorpus, EveryRepoIsFoundByTheQueries) {
    const auto p = fixture::profile("ucsc");
    mock::MockGitHub github(mock::synthetic_corpus(p, 7, 300));
    fixture::InProcess env([&](const HttpRequest& r) { return github.handle(r); });
    GitHubClient client(env.api, {}, &env.log);
    std::set<std::string> found;
    for (const auto& q : generate_queries(p))
        for (const auto& item : client.run_search(q).items) found.insert(item.repo_id);
    EXPECT_EQ(found.size(), 300u);
    EXPECT_GE(github.count("search"), 17);
}

TEST(MockGitHub, RepoEndpointsAndCounters) {
    const auto p = fixture::profile("ucsc");
    const auto corpus = mock::synthetic_corpus(p, 7, 10);
    mock::MockGitHub github(corpus);
    const auto& first = corpus.repos.front();
    const std::string id = first.summary["full_name"];
    const auto repo = github.handle(get("/repos/" + id));
    EXPECT_EQ(repo.status, 200);
    EXPECT_EQ(nlohmann::json::parse(repo.body)["full_name"], id);

    const auto readme = github.handle(get("/repos/" + id + "/readme"));
    ASSERT_EQ(readme.status, 200);
    std::string b64 = nlohmann::json::parse(readme.body)["content"];
    std::erase(b64, '\n');
    EXPECT_EQ(text::base64_decode(b64), first.readme);

    EXPECT_EQ(github.handle(get("/repos/" + id + "/community/profile")).status, 200);
    EXPECT_EQ(github.handle(get("/repos/" + id + "/contributors?per_page=100&page=1")).status, 200);
    EXPECT_EQ(github.handle(get("/repos/nobody/none")).status, 404);
    EXPECT_EQ(github.handle({"POST", "/repos/" + id, "{}", {}}).status, 405);
    EXPECT_EQ(github.count("repo"), 2);
    EXPECT_EQ(github.count("readme"), 1);
    github.delete_repo(id);
    EXPECT_EQ(github.handle(get("/repos/" + id)).status, 404);
    github.reset_counters();
    EXPECT_EQ(github.total_requests(), 0);
}

TEST(MockGitHub, InjectedRateLimit) {
    mock::MockGitHub github(mock::keyword_corpus("k", 3), {1000, 2, 1700000000});
    const auto first = github.handle(get("/search/repositories?q=k&page=1"));
    EXPECT_EQ(first.status, 403);
    EXPECT_EQ(first.header("X-RateLimit-Remaining"), "0");
    EXPECT_EQ(first.header("X-RateLimit-Reset"), "1700000000");
    EXPECT_EQ(github.handle(get("/search/repositories?q=k&page=1")).status, 403);
    EXPECT_EQ(github.handle(get("/search/repositories?q=k&page=1")).status, 200);
    EXPECT_EQ(github.count("rate_limited"), 2);
}

TEST(MockGitHub, SearchBeyondCapIs422) {
    mock::MockGitHub github(mock::keyword_corpus("k", 30), {10});
    EXPECT_EQ(github.handle(get("/search/repositories?q=k&per_page=10&page=1")).status, 200);
    EXPECT_EQ(github.handle(get("/search/repositories?q=k&per_page=10&page=2")).status, 422);
}

TEST(MockChat, ScoresAndGarbles) {
    mock::MockChat chat(1);
    const nlohmann::json req{{"model", "mock"},
                             {"messages", {{{"role", "user"}, {"content", "no evidence"}}}}};
    const auto garbled = chat.handle({"POST", "/v1/chat/completions", req.dump(), {}});
    ASSERT_EQ(garbled.status, 200);
    const std::string g = nlohmann::json::parse(garbled.body)["choices"][0]["message"]["content"];
    EXPECT_EQ(g.find("Probability"), std::string::npos);
    const auto ok = chat.handle({"POST", "/v1/chat/completions", req.dump(), {}});
    const std::string content = nlohmann::json::parse(ok.body)["choices"][0]["message"]["content"];
    EXPECT_NE(content.find("Probability: 0.05"), std::string::npos);
    EXPECT_EQ(chat.requests(), 2);
}
