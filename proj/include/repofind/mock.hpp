#pragma once

// Deterministic in-repo stand-ins for the three external services: a
// GitHub-compatible REST API over a synthetic corpus, an embeddings endpoint
// (hashed bag of words) and a chat-completions endpoint (keyword rules).
// Each exposes handle(request) so tests can call it in-process through a
// FunctionTransport or serve it over HTTP with HttpServer.

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind::mock {

struct MockRepo {
    nlohmann::json summary;  // search-item shape: full_name, name, owner{login,type}, description, ...
    std::string readme;      // empty: /readme answers 404
    nlohmann::json community_files = nlohmann::json::object();
    std::vector<nlohmann::json> releases;
    std::vector<nlohmann::json> contributors;  // {login, contributions}
    std::string planted_institution;           // institution the repo was generated for
    int planted_label = 0;                     // ground truth for that institution
};

struct Corpus {
    std::vector<MockRepo> repos;
    std::map<std::string, nlohmann::json> accounts;            // login -> /users/{login} body
    std::map<std::string, std::vector<std::string>> user_orgs; // login -> organization logins

    const MockRepo* find(const std::string& repo_id) const;
    /// Ground truth as (repo_id, label) for repos planted for `institution_id`.
    std::vector<std::pair<std::string, int>> truth(const std::string& institution_id) const;
};

/// `n_repos` repositories for one institution, half with planted affiliation.
/// Affiliated repos are owned by lab organizations on the institution's domain,
/// with university-mail contributors and research vocabulary; the others are
/// curated lists, personal projects and forks that only mention the institution
/// in passing. Every repo matches at least one of the institution's queries.
Corpus synthetic_corpus(const InstitutionProfile& profile, std::uint64_t seed, std::size_t n_repos = 300);

/// `n_repos` user-owned repos whose names all contain `keyword`.
Corpus keyword_corpus(const std::string& keyword, std::size_t n_repos);

struct GitHubOptions {
    int result_cap = 1000;
    /// The first N requests are answered 403 with X-RateLimit-Remaining: 0.
    int rate_limit_first = 0;
    /// Reset time (epoch seconds) reported with injected 403s.
    std::int64_t rate_limit_reset = 0;
};

class MockGitHub {
public:
    explicit MockGitHub(Corpus corpus, GitHubOptions options = {});

    HttpResponse handle(const HttpRequest& request);

    /// Requests per endpoint kind: search, repo, readme, community, releases,
    /// contributors, user, user_orgs, other.
    std::int64_t count(const std::string& kind) const;
    std::int64_t total_requests() const;
    void reset_counters();
    /// Subsequent requests for this repo answer 404.
    void delete_repo(const std::string& repo_id);
    const Corpus& corpus() const { return corpus_; }

private:
    HttpResponse search(const ParsedTarget& t);
    HttpResponse repo_endpoint(const std::vector<std::string>& parts, const ParsedTarget& t);
    HttpResponse user_endpoint(const std::vector<std::string>& parts);
    void bump(const std::string& kind);

    Corpus corpus_;
    GitHubOptions options_;
    std::map<std::string, std::size_t> index_;
    std::set<std::string> deleted_;
    mutable std::mutex mu_;
    std::map<std::string, std::int64_t> counters_;
    std::int64_t served_ = 0;
};

// ---------------------------------------------------------------------------

/// Lowercase alphanumeric tokens of `s`.
std::vector<std::string> tokenize(std::string_view s);

/// Signed feature hashing of tokens into `dim` buckets, L2-normalized.
std::vector<double> hashed_embedding(std::string_view text, std::size_t dim);

class MockEmbeddings {
public:
    explicit MockEmbeddings(std::size_t dim = 64) : dim_(dim) {}
    HttpResponse handle(const HttpRequest& request);
    std::int64_t requests() const { return requests_; }
    std::int64_t inputs() const { return inputs_; }

private:
    std::size_t dim_;
    std::atomic<std::int64_t> requests_{0};
    std::atomic<std::int64_t> inputs_{0};
};

class MockChat {
public:
    /// The first `garble_first` replies lack the Probability line.
    explicit MockChat(int garble_first = 0) : garble_remaining_(garble_first) {}
    HttpResponse handle(const HttpRequest& request);
    std::int64_t requests() const { return requests_; }

    /// Rule used for replies: high when the repository block mentions the
    /// institution's domain, medium for its name, acronym or alternates.
    static double score_prompt(std::string_view prompt);

private:
    std::atomic<int> garble_remaining_;
    std::atomic<std::int64_t> requests_{0};
};

/// Routes /v1/embeddings and /v1/chat/completions to the model mocks and
/// everything else to the GitHub mock.
class MockServices {
public:
    MockServices(Corpus corpus, GitHubOptions options = {}, std::size_t embedding_dim = 64, int chat_garble = 0);
    HttpResponse handle(const HttpRequest& request);

    MockGitHub github;
    MockEmbeddings embeddings;
    MockChat chat;
};

}  // namespace repofind::mock
