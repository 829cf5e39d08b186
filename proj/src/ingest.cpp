#include "repofind/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>

#include "repofind/text.hpp"

namespace repofind {

using nlohmann::json;

std::string render_query(SearchAttribute attribute, std::string_view keyword) {
    switch (attribute) {
        case SearchAttribute::name: return "\"" + std::string(keyword) + "\" in:name";
        case SearchAttribute::description: return "\"" + std::string(keyword) + "\" in:description";
        case SearchAttribute::readme: return "\"" + std::string(keyword) + "\" in:readme";
        case SearchAttribute::email: return "\"" + std::string(keyword) + "\" in:email";
        case SearchAttribute::topics: {
            std::string topic = text::to_lower(text::collapse_whitespace(keyword));
            std::replace(topic.begin(), topic.end(), ' ', '-');
            return "topic:" + topic;
        }
    }
    return {};
}

std::vector<SearchQuery> generate_queries(const InstitutionProfile& profile) {
    validate(profile);
    std::vector<std::string> keywords{profile.name, profile.acronym, profile.domain};
    keywords.insert(keywords.end(), profile.alternates.begin(), profile.alternates.end());

    std::vector<SearchQuery> out;
    out.reserve(keywords.size() * 4 + 1);
    for (const auto& kw : keywords) {
        for (auto attr : {SearchAttribute::name, SearchAttribute::description, SearchAttribute::readme,
                          SearchAttribute::topics}) {
            out.push_back({profile.id, kw, attr, render_query(attr, kw)});
        }
    }
    out.push_back({profile.id, profile.domain, SearchAttribute::email,
                   render_query(SearchAttribute::email, profile.domain)});
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

std::int64_t count(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return 0;
    return std::max<std::int64_t>(0, it->get<std::int64_t>());
}

bool present(const json& files, const char* key) {
    auto it = files.find(key);
    return it != files.end() && !it->is_null();
}

std::pair<std::string, std::string> split_repo_id(const std::string& repo_id) {
    const auto slash = repo_id.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == repo_id.size())
        throw InputError("repo id '" + repo_id + "' is not owner/name");
    return {repo_id.substr(0, slash), repo_id.substr(slash + 1)};
}

std::string repo_path(const std::string& repo_id) {
    auto [owner, name] = split_repo_id(repo_id);
    return "/repos/" + text::url_encode(owner) + "/" + text::url_encode(name);
}

std::chrono::sys_days parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw ConfigError("bad date '" + s + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ConfigError("bad date '" + s + "'");
    return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace

RepoRecord repo_from_summary(const json& s) {
    RepoRecord r;
    r.repo_id = str(s, "full_name");
    if (r.repo_id.empty()) {
        const auto owner = s.contains("owner") && s["owner"].is_object() ? str(s["owner"], "login") : "";
        r.repo_id = owner + "/" + str(s, "name");
    }
    r.numeric_id = count(s, "id");
    r.name = str(s, "name");
    r.description = str(s, "description");
    r.homepage = str(s, "homepage");
    if (auto it = s.find("topics"); it != s.end() && it->is_array())
        for (const auto& t : *it)
            if (t.is_string()) r.topics.push_back(t.get<std::string>());
    r.primary_language = str(s, "language");
    if (auto it = s.find("license"); it != s.end() && it->is_object()) {
        const auto spdx = str(*it, "spdx_id");
        if (!spdx.empty()) r.license_id = spdx;
    }
    if (auto it = s.find("owner"); it != s.end() && it->is_object()) {
        r.owner_login = str(*it, "login");
        r.owner_kind = str(*it, "type") == "Organization" ? OwnerKind::organization : OwnerKind::user;
    }
    r.stars = count(s, "stargazers_count");
    r.forks = count(s, "forks_count");
    r.subscribers = count(s, "subscribers_count");
    r.created_at = str(s, "created_at");
    r.updated_at = str(s, "updated_at");
    r.community.has_description = !r.description.empty();
    r.community.has_license = r.license_id != kNoLicense;
    return r;
}

// ---------------------------------------------------------------------------

GitHubClient::GitHubClient(ApiClient& api, IngestOptions options, RunLog* log, PayloadArchive archive)
    : api_(api), options_(std::move(options)), log_(log), archive_(std::move(archive)) {
    if (options_.per_page <= 0 || options_.result_cap <= 0) throw ConfigError("per_page and result_cap must be positive");
    if (options_.top_contributors < 0) throw ConfigError("top_contributors must be >= 0");
}

std::optional<json> GitHubClient::get_json(const std::string& target, bool not_found_ok) {
    HttpResponse res = api_.get(target);
    if (res.status == 404 && not_found_ok) return std::nullopt;
    if (res.status == 204) return json();
    if (res.status != 200)
        throw ProtocolError("GET " + target + " returned HTTP " + std::to_string(res.status));
    if (archive_) archive_(target, res.body);
    try {
        return json::parse(res.body);
    } catch (const json::parse_error& e) {
        throw ProtocolError("GET " + target + ": malformed JSON: " + e.what());
    }
}

GitHubClient::Page GitHubClient::search_page(const std::string& q, int page) {
    const std::string target = "/search/repositories?q=" + text::url_encode(q) +
                               "&per_page=" + std::to_string(options_.per_page) + "&page=" + std::to_string(page);
    HttpResponse res = api_.get(target);
    Page out;
    if (res.status == 422) {
        out.cap_rejected = true;
        return out;
    }
    if (res.status != 200) throw ProtocolError("search '" + q + "' returned HTTP " + std::to_string(res.status));
    if (archive_) archive_(target, res.body);
    json body;
    try {
        body = json::parse(res.body);
    } catch (const json::parse_error& e) {
        throw ProtocolError("search '" + q + "': malformed JSON: " + e.what());
    }
    out.total_count = count(body, "total_count");
    if (auto it = body.find("items"); it != body.end() && it->is_array())
        out.items.assign(it->begin(), it->end());
    return out;
}

void GitHubClient::search_window(const SearchQuery& query, const std::string& q, SearchResult& out,
                                 std::vector<std::string>& seen, bool allow_split, const std::string& from,
                                 const std::string& to) {
    std::vector<json> collected;
    std::int64_t total = 0;
    bool truncated = false;
    for (int page = 1;; ++page) {
        Page p = search_page(q, page);
        if (p.cap_rejected) {
            truncated = true;
            break;
        }
        total = std::max(total, p.total_count);
        // Splitting before collecting further pages saves requests.
        if (page == 1 && allow_split && total > options_.result_cap) {
            const auto lo = parse_date(from);
            const auto hi = parse_date(to);
            if (lo < hi) {
                const auto mid = lo + (hi - lo) / 2;
                const std::string base = query.rendered;
                const std::string left_from = from, left_to = format_date(mid);
                const std::string right_from = format_date(mid + std::chrono::days{1}), right_to = to;
                out.windows_searched += 1;
                search_window(query, base + " created:" + left_from + ".." + left_to, out, seen, true, left_from,
                              left_to);
                search_window(query, base + " created:" + right_from + ".." + right_to, out, seen, true,
                              right_from, right_to);
                return;
            }
        }
        for (auto& item : p.items) {
            if (static_cast<int>(collected.size()) >= options_.result_cap) break;
            collected.push_back(std::move(item));
        }
        if (static_cast<int>(collected.size()) >= options_.result_cap) {
            truncated = total > options_.result_cap;
            break;
        }
        if (static_cast<int>(p.items.size()) < options_.per_page) break;
        if (static_cast<std::int64_t>(collected.size()) >= total) break;
    }
    if (truncated) {
        out.truncated = true;
        if (log_)
            log_->warning("search_truncated",
                          "query '" + q + "' matched " + std::to_string(total) + " repositories; only " +
                              std::to_string(collected.size()) + " retrievable",
                          {{"institution", query.institution_id}, {"query", q}, {"total_count", total},
                           {"retrieved", collected.size()}});
    }
    out.total_count += total;
    const MatchedQuery provenance{query.institution_id, query.attribute, query.keyword};
    for (auto& item : collected) {
        RepoSummary s;
        s.repo_id = str(item, "full_name");
        if (s.repo_id.empty()) continue;
        if (std::find(seen.begin(), seen.end(), s.repo_id) != seen.end()) continue;
        seen.push_back(s.repo_id);
        s.raw = std::move(item);
        s.matched_queries.push_back(provenance);
        out.items.push_back(std::move(s));
    }
}

SearchResult GitHubClient::run_search(const SearchQuery& query) {
    SearchResult out;
    out.windows_searched = 1;
    std::vector<std::string> seen;
    std::string to = options_.slicing_end;
    if (to.empty()) to = format_date(std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now()));
    search_window(query, query.rendered, out, seen, options_.date_slicing, options_.slicing_start, to);
    if (log_)
        log_->event("search", {{"institution", query.institution_id}, {"query", query.rendered},
                               {"results", out.items.size()}, {"truncated", out.truncated}});
    return out;
}

std::optional<RepoRecord> GitHubClient::enrich_repository(const RepoSummary& summary) {
    const std::string base = repo_path(summary.repo_id);

    auto detail = get_json(base, true);
    if (!detail) {
        if (log_) log_->warning("repo_skipped", "repository " + summary.repo_id + " no longer exists",
                                {{"repo_id", summary.repo_id}});
        return std::nullopt;
    }
    json merged = summary.raw.is_object() ? summary.raw : json::object();
    if (detail->is_object())
        for (auto it = detail->begin(); it != detail->end(); ++it) merged[it.key()] = it.value();
    RepoRecord r = repo_from_summary(merged);
    r.repo_id = summary.repo_id;
    r.matched_queries = summary.matched_queries;

    if (auto readme = get_json(base + "/readme", true); readme && readme->is_object()) {
        std::optional<std::string> decoded;
        if (str(*readme, "encoding") == "base64") decoded = text::base64_decode(str(*readme, "content"));
        else decoded = str(*readme, "content");
        if (decoded && text::is_text(*decoded)) r.readme_text = std::move(*decoded);
    }

    if (auto profile = get_json(base + "/community/profile", true); profile && profile->is_object()) {
        const json files = profile->value("files", json::object());
        if (files.is_object()) {
            r.community.has_license = r.community.has_license || present(files, "license");
            r.community.has_code_of_conduct = present(files, "code_of_conduct");
            r.community.has_contributing = present(files, "contributing");
            r.community.has_security_policy = present(files, "security_policy");
            r.community.has_issue_template = present(files, "issue_template");
            r.community.has_pr_template = present(files, "pull_request_template");
        }
    }

    std::int64_t downloads = 0;
    for (int page = 1;; ++page) {
        auto releases = get_json(base + "/releases?per_page=" + std::to_string(options_.per_page) +
                                     "&page=" + std::to_string(page),
                                 true);
        if (!releases || !releases->is_array()) break;
        for (const auto& rel : *releases)
            if (auto assets = rel.find("assets"); assets != rel.end() && assets->is_array())
                for (const auto& a : *assets) downloads += count(a, "download_count");
        if (static_cast<int>(releases->size()) < options_.per_page) break;
    }
    r.release_download_count = downloads;

    r.community.has_readme = !r.readme_text.empty();
    r.community.has_description = !r.description.empty();
    return r;
}

std::vector<ContributorRecord> GitHubClient::fetch_contributors(const std::string& repo_id) {
    const std::string base = repo_path(repo_id) + "/contributors";
    std::vector<json> listed;
    for (int page = 1; page <= options_.max_contributor_pages; ++page) {
        auto body = get_json(base + "?per_page=" + std::to_string(options_.per_page) + "&page=" + std::to_string(page),
                             true);
        if (!body || !body->is_array()) break;
        listed.insert(listed.end(), body->begin(), body->end());
        if (static_cast<int>(body->size()) < options_.per_page) break;
    }
    if (listed.empty()) {
        if (log_) log_->event("contributors_empty", {{"repo_id", repo_id}});
        return {};
    }
    std::stable_sort(listed.begin(), listed.end(),
                     [](const json& a, const json& b) { return count(a, "contributions") > count(b, "contributions"); });

    std::vector<ContributorRecord> out;
    for (const auto& c : listed) {
        ContributorRecord rec;
        rec.repo_id = repo_id;
        rec.username = str(c, "login");
        if (rec.username.empty()) continue;  // anonymous contributors carry no profile
        if (std::any_of(out.begin(), out.end(), [&](const auto& o) { return o.username == rec.username; })) continue;
        rec.rank = static_cast<int>(out.size()) + 1;
        rec.contributions = count(c, "contributions");
        out.push_back(std::move(rec));
    }
    for (auto& rec : out) {
        if (rec.rank > options_.top_contributors) break;
        const std::string user = "/users/" + text::url_encode(rec.username);
        auto profile = get_json(user, true);
        if (!profile || !profile->is_object()) continue;
        rec.profiled = true;
        rec.name = str(*profile, "name");
        rec.bio = str(*profile, "bio");
        rec.location = str(*profile, "location");
        rec.company = str(*profile, "company");
        rec.email = str(*profile, "email");
        rec.twitter = str(*profile, "twitter_username");
        if (auto orgs = get_json(user + "/orgs", true); orgs && orgs->is_array())
            for (const auto& o : *orgs)
                if (auto login = str(o, "login"); !login.empty()) rec.organizations.push_back(login);
    }
    return out;
}

std::optional<OrgRecord> GitHubClient::fetch_organization(const std::string& owner_login) {
    auto body = get_json("/users/" + text::url_encode(owner_login), true);
    if (!body) {
        if (log_) log_->warning("org_missing", "account " + owner_login + " not found", {{"login", owner_login}});
        return std::nullopt;
    }
    if (!body->is_object() || str(*body, "type") != "Organization") return std::nullopt;
    OrgRecord org;
    org.login = str(*body, "login");
    if (org.login.empty()) org.login = owner_login;
    org.name = str(*body, "name");
    org.company = str(*body, "company");
    org.location = str(*body, "location");
    org.description = str(*body, "description");
    if (org.description.empty()) org.description = str(*body, "bio");
    org.email = str(*body, "email");
    org.url = str(*body, "blog");
    if (org.url.empty()) org.url = str(*body, "html_url");
    org.created_at = str(*body, "created_at");
    return org;
}

}  // namespace repofind
