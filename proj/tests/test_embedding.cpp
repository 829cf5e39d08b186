#include <gtest/gtest.h>

#include <cmath>

#include "repofind/embedding.hpp"
#include "repofind/mock.hpp"
#include "repofind/store.hpp"
#include "support.hpp"

using namespace repofind;

namespace {

std::string line_value(const std::string& text, const std::string& label) {
    const auto start = text.find(label + ": ");
    if (start == std::string::npos) return "<missing>";
    const auto from = start + label.size() + 2;
    return text.substr(from, text.find('\n', from) - from);
}

std::vector<AssembledText> texts(int n) {
    std::vector<AssembledText> out;
    for (int i = 0; i < n; ++i) out.push_back({"o/r" + std::to_string(i), "text number " + std::to_string(i)});
    return out;
}

}  // namespace

TEST(Assembly, ReadmeTruncatedToLimit) {
    auto r = fixture::repo("o/r", "short");
    r.readme_text = std::string(12000, 'x');
    const auto t = assemble_text(r, nullptr, {});
    EXPECT_EQ(line_value(t.text, "repo.readme").size(), 10000u);
    EXPECT_EQ(line_value(t.text, "repo.description"), "short");
}

TEST(Assembly, TruncationCountsCodePoints) {
    auto r = fixture::repo("o/r");
    r.readme_text.clear();
    for (int i = 0; i < 20; ++i) r.readme_text += "\xC3\xA9";  // two bytes each
    EXPECT_EQ(line_value(assemble_text(r, nullptr, {}, 5).text, "repo.readme"), std::string(r.readme_text, 0, 10));
}

TEST(Assembly, SkeletonForEmptyRecordIsStable) {
    const RepoRecord empty;
    const auto a = assemble_text(empty, nullptr, {});
    EXPECT_EQ(a, assemble_text(empty, nullptr, {}));
    const std::vector<std::string> order{"repo.name", "repo.readme", "org.login", "org.url", "contributor1.username",
                                         "contributor2.organizations"};
    std::size_t last = 0;
    for (const auto& label : order) {
        const auto pos = a.text.find(label + ": \n");
        ASSERT_NE(pos, std::string::npos) << label;
        EXPECT_GE(pos, last);
        last = pos;
    }
}

TEST(Assembly, ContributorsPlacedByRank) {
    ContributorRecord second;
    second.rank = 2;
    second.username = "bob";
    ContributorRecord first;
    first.rank = 1;
    first.username = "alice";
    const auto t = assemble_text(fixture::repo("o/r"), nullptr, {second, first}).text;
    EXPECT_EQ(line_value(t, "contributor1.username"), "alice");
    EXPECT_EQ(line_value(t, "contributor2.username"), "bob");
}

TEST(Embedding, MockVectorsHaveServiceDimension) {
    mock::MockEmbeddings service(8);
    fixture::InProcess env([&](const HttpRequest& r) { return service.handle(r); });
    EmbeddingClient client(env.api, "mock-embed", 2);
    const auto v = embed(texts(5), client);
    ASSERT_EQ(v.size(), 5u);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(v[i].repo_id, "o/r" + std::to_string(i));
        EXPECT_EQ(v[i].dim(), 8u);
        EXPECT_EQ(v[i].model_tag, "mock-embed");
        EXPECT_EQ(v[i].values, mock::hashed_embedding("text number " + std::to_string(i), 8));
    }
    EXPECT_EQ(client.requests(), 3);
}

TEST(Embedding, CacheAvoidsRepeatCalls) {
    Store store(":memory:");
    store.register_institution(fixture::profile());
    for (int i = 0; i < 4; ++i) store.upsert_repo(fixture::repo("o/r" + std::to_string(i)));
    mock::MockEmbeddings service(8);
    fixture::InProcess env([&](const HttpRequest& r) { return service.handle(r); });
    EmbeddingClient client(env.api, "mock-embed");
    const auto first = embed(texts(4), client, &store);
    EXPECT_EQ(service.requests(), 1);
    const auto second = embed(texts(4), client, &store);
    EXPECT_EQ(service.requests(), 1);
    for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].values, second[i].values);

    auto changed = texts(4);
    changed[2].text = "edited";
    embed(changed, client, &store);
    EXPECT_EQ(service.requests(), 2);
    EXPECT_EQ(service.inputs(), 5);
}

TEST(Embedding, EmptyBatchIsRejected) {
    mock::MockEmbeddings service(8);
    fixture::InProcess env([&](const HttpRequest& r) { return service.handle(r); });
    EmbeddingClient client(env.api, "m");
    EXPECT_THROW(embed({}, client), InputError);
}

TEST(Embedding, ServiceFailureNamesRepos) {
    fixture::InProcess env([](const HttpRequest&) { return HttpResponse{503, "down", {}}; });
    EmbeddingClient client(env.api, "m");
    try {
        embed(texts(2), client);
        FAIL();
    } catch (const EmbeddingError& e) {
        EXPECT_EQ(e.repo_ids(), (std::vector<std::string>{"o/r0", "o/r1"}));
    }
}

TEST(Embedding, MalformedResponsesAreProtocolErrors) {
    int dim = 3;
    fixture::InProcess env([&](const HttpRequest& r) {
        const auto body = nlohmann::json::parse(r.body);
        nlohmann::json data = nlohmann::json::array();
        for (std::size_t i = 0; i < body["input"].size(); ++i)
            data.push_back({{"index", i}, {"embedding", std::vector<double>(dim++, 0.5)}});
        return HttpResponse{200, nlohmann::json{{"data", data}}.dump(), {}};
    });
    EmbeddingClient client(env.api, "m");
    EXPECT_THROW(embed(texts(2), client), ProtocolError);

    fixture::InProcess garbage([](const HttpRequest&) { return HttpResponse{200, "{\"data\": 5}", {}}; });
    EmbeddingClient bad(garbage.api, "m");
    EXPECT_THROW(embed(texts(1), bad), ProtocolError);
}

TEST(Embedding, HashedEmbeddingIsUnitLength) {
    const auto v = mock::hashed_embedding("Research software for genomics", 64);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
    EXPECT_EQ(v, mock::hashed_embedding("research SOFTWARE for genomics", 64));
}
