#pragma once

// The three collection phases against a GitHub-compatible REST API:
// repository search and enrichment, contributors, owning organizations.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind {

struct SearchQuery {
    std::string institution_id;
    std::string keyword;
    SearchAttribute attribute{SearchAttribute::name};
    std::string rendered;  // exact `q=` value sent to /search/repositories

    friend bool operator==(const SearchQuery&, const SearchQuery&) = default;
};

/// Qualifier syntax per attribute:
///   name        "<kw>" in:name
///   description "<kw>" in:description
///   readme      "<kw>" in:readme
///   topics      topic:<kw-hyphenated>   (lowercased, whitespace runs -> '-')
///   email       "<domain>" in:email
std::string render_query(SearchAttribute attribute, std::string_view keyword);

/// (name, acronym, domain, alternates...) x (name, description, readme, topics),
/// keyword-major, followed by the single domain x email query.
std::vector<SearchQuery> generate_queries(const InstitutionProfile& profile);

/// One search hit, tagged with every query that surfaced it.
struct RepoSummary {
    std::string repo_id;
    nlohmann::json raw;
    std::vector<MatchedQuery> matched_queries;
};

struct SearchResult {
    std::vector<RepoSummary> items;
    std::int64_t total_count = 0;
    bool truncated = false;   // the service's result cap hid some matches
    int windows_searched = 1; // > 1 when created-date slicing was used
};

struct IngestOptions {
    int per_page = 100;
    int result_cap = 1000;
    bool date_slicing = false;
    std::string slicing_start = "2008-01-01";
    std::string slicing_end;  // empty: today (UTC)
    int top_contributors = 2;
    int max_contributor_pages = 5;
};

/// Called with (request target, raw body) for every successful payload so runs
/// can be re-parsed without re-fetching.
using PayloadArchive = std::function<void(const std::string& key, const std::string& body)>;

class GitHubClient {
public:
    GitHubClient(ApiClient& api, IngestOptions options = {}, RunLog* log = nullptr, PayloadArchive archive = {});

    /// Pages through /search/repositories. A 422 from the service or hitting the
    /// result cap records a truncation warning; with date slicing enabled a capped
    /// query is split into created-date windows until each fits under the cap.
    SearchResult run_search(const SearchQuery& query);

    /// Repo detail, README, community profile and release downloads.
    /// Returns nullopt (logged) when the repository no longer exists.
    std::optional<RepoRecord> enrich_repository(const RepoSummary& summary);

    /// Contributors in commit-count order with 1-based ranks; the top N get a
    /// full user profile and organization list.
    std::vector<ContributorRecord> fetch_contributors(const std::string& repo_id);

    /// The owner's OrgRecord when the account is an organization.
    std::optional<OrgRecord> fetch_organization(const std::string& owner_login);

    const IngestOptions& options() const { return options_; }

private:
    struct Page {
        std::vector<nlohmann::json> items;
        std::int64_t total_count = 0;
        bool cap_rejected = false;
    };
    Page search_page(const std::string& q, int page);
    void search_window(const SearchQuery& query, const std::string& q, SearchResult& out,
                       std::vector<std::string>& seen, bool allow_split, const std::string& from,
                       const std::string& to);
    std::optional<nlohmann::json> get_json(const std::string& target, bool not_found_ok);

    ApiClient& api_;
    IngestOptions options_;
    RunLog* log_;
    PayloadArchive archive_;
};

/// Builds a RepoRecord from a search summary alone (no extra requests).
RepoRecord repo_from_summary(const nlohmann::json& summary);

}  // namespace repofind
