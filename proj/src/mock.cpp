#include "repofind/mock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "repofind/text.hpp"

namespace repofind::mock {

using nlohmann::json;

const MockRepo* Corpus::find(const std::string& repo_id) const {
    for (const auto& r : repos)
        if (r.summary.value("full_name", "") == repo_id) return &r;
    return nullptr;
}

std::vector<std::pair<std::string, int>> Corpus::truth(const std::string& institution_id) const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& r : repos)
        if (r.planted_institution == institution_id) out.emplace_back(r.summary.value("full_name", ""), r.planted_label);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus.

namespace {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[index(v.size())];
    }
    std::string date() {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:00Z", range(2010, 2024), range(1, 12), range(1, 28),
                      range(0, 23), range(0, 59));
        return buf;
    }
    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

const std::vector<std::string> kFields{"genomics", "robotics", "ecology", "vision", "compilers", "climate",
                                       "networks", "proteins", "astro", "neuro", "security", "hci"};
const std::vector<std::string> kTools{"pipeline", "toolkit", "sim", "analysis", "models", "bench", "viz", "solver"};
const std::vector<std::string> kThings{"python", "rust", "datasets", "interview", "design", "devops", "gamedev",
                                       "fonts", "shaders", "linux", "cheatsheets", "podcasts"};
const std::vector<std::string> kFirst{"alex", "sam", "jordan", "taylor", "casey", "morgan", "riley", "jamie",
                                      "devon", "quinn", "avery", "parker", "reese", "skyler", "rowan", "emery"};
const std::vector<std::string> kLanguages{"Python", "C++", "JavaScript", "R", "Jupyter Notebook", "Java", "Go", ""};
const std::vector<std::string> kResearchLicenses{"MIT", "BSD-3-Clause", "GPL-3.0", "Apache-2.0", "NONE", "NONE"};
const std::vector<std::string> kHobbyLicenses{"MIT", "CC0-1.0", "NONE", "NONE", "NONE", "Unlicense"};
const std::vector<std::string> kResearchSentences{
    "This repository contains the research code accompanying our paper.",
    "Experiments from the laboratory are reproducible with the scripts in this repository.",
    "Maintained by graduate students and faculty of the department.",
    "Funded by a federal research grant; please cite our publication.",
    "The lab develops open research software for the scientific community.",
    "Results reported in the thesis were produced with this implementation.",
    "Questions about the study should go to the principal investigator.",
};
const std::vector<std::string> kHobbySentences{
    "A curated list of awesome links, tutorials and resources.",
    "Contributions welcome! Please read the contribution guidelines first.",
    "Just a weekend hobby project, nothing serious.",
    "Unofficial mirror kept for convenience; star it if you like it.",
    "My personal notes and cheatsheets collected over the years.",
    "Fork of a popular template with some tweaks for my own setup.",
    "Random snippets, memes and bookmarks I find useful.",
};

json user_account(const std::string& login, const std::string& name, const std::string& bio,
                  const std::string& company, const std::string& email, const std::string& created) {
    return json{{"login", login},   {"type", "User"},   {"name", name},         {"bio", bio},
                {"location", ""},   {"company", company}, {"email", email},     {"twitter_username", ""},
                {"blog", ""},       {"html_url", "https://github.com/" + login}, {"created_at", created}};
}

json license_json(const std::string& spdx) {
    if (spdx == "NONE") return nullptr;
    return json{{"key", text::to_lower(spdx)}, {"spdx_id", spdx}, {"name", spdx}};
}

void finish_repo(MockRepo& r, Gen& g, const std::string& owner, const std::string& owner_type, const std::string& name,
                 const std::string& license, std::int64_t id) {
    auto& s = r.summary;
    s["id"] = id;
    s["name"] = name;
    s["full_name"] = owner + "/" + name;
    s["owner"] = json{{"login", owner}, {"type", owner_type}};
    s["language"] = g.pick(kLanguages);
    s["license"] = license_json(license);
    s["stargazers_count"] = g.range(0, 900);
    s["forks_count"] = g.range(0, 200);
    s["subscribers_count"] = g.range(0, 60);
    s["created_at"] = g.date();
    s["updated_at"] = "2025-01-15T00:00:00Z";
    auto file = [&](double p, const char* url) { return g.chance(p) ? json{{"url", url}} : json(nullptr); };
    r.community_files = json{{"license", license == "NONE" ? json(nullptr) : json{{"spdx_id", license}}},
                             {"code_of_conduct", file(0.15, "coc")},
                             {"contributing", file(0.25, "contributing")},
                             {"security_policy", file(0.1, "security")},
                             {"issue_template", file(0.2, "issue")},
                             {"pull_request_template", file(0.15, "pr")},
                             {"readme", r.readme.empty() ? json(nullptr) : json{{"url", "readme"}}}};
    const int releases = g.range(0, 2);
    for (int k = 0; k < releases; ++k)
        r.releases.push_back(json{{"tag_name", "v" + std::to_string(k + 1)},
                                  {"assets", json::array({json{{"download_count", g.range(0, 500)}}})}});
}

}  // namespace

Corpus synthetic_corpus(const InstitutionProfile& p, std::uint64_t seed, std::size_t n_repos) {
    Gen g(seed);
    Corpus c;
    const std::string acr = text::to_lower(p.acronym);
    const std::string alt = p.alternates.empty() ? p.name : p.alternates.front();
    const std::size_t n_pos = n_repos / 2;

    // Lab organizations on the institution's domain.
    std::vector<std::string> labs;
    for (const auto& field : kFields) {
        const std::string login = acr + "-" + field + "-lab";
        std::string title = field;
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        c.accounts[login] = json{{"login", login},
                                 {"type", "Organization"},
                                 {"name", title + " Lab"},
                                 {"description", title + " research group at " + alt},
                                 {"company", ""},
                                 {"location", ""},
                                 {"email", field + "lab@" + p.domain},
                                 {"blog", "https://" + field + "." + p.domain},
                                 {"html_url", "https://github.com/" + login},
                                 {"created_at", "2012-03-01T00:00:00Z"}};
        labs.push_back(login);
    }
    // Hobby organizations unrelated to the institution.
    for (const auto& login : {std::string("awesome-collective"), std::string("weekend-hackers")})
        c.accounts[login] = json{{"login", login},     {"type", "Organization"}, {"name", login},
                                 {"description", "Community collection of curated resources"},
                                 {"company", ""},      {"location", ""},         {"email", "team@" + login + ".dev"},
                                 {"blog", "https://" + login + ".dev"},          {"html_url", "https://github.com/" + login},
                                 {"created_at", "2015-06-01T00:00:00Z"}};

    for (std::size_t i = 0; i < n_repos; ++i) {
        MockRepo r;
        r.planted_institution = p.id;
        const bool affiliated = i < n_pos;
        r.planted_label = affiliated ? 1 : 0;
        const auto id = static_cast<std::int64_t>(100000 + i);
        const auto tag = std::to_string(i);

        std::vector<std::string> people;
        const int n_contrib = g.range(2, 4);
        for (int k = 0; k < n_contrib; ++k) {
            const std::string login = g.pick(kFirst) + "-" + tag + "-" + std::to_string(k);
            people.push_back(login);
            if (affiliated) {
                c.accounts[login] = user_account(login, login, "PhD student, " + alt, alt, login + "@" + p.domain,
                                                 "2016-01-01T00:00:00Z");
            } else {
                c.accounts[login] = user_account(login, login, "Hobbyist developer and open source fan", "Acme Corp",
                                                 login + "@gmail.com", "2016-01-01T00:00:00Z");
            }
            r.contributors.push_back(json{{"login", login}, {"contributions", 200 - 40 * k - g.range(0, 30)}});
        }

        std::string owner, owner_type, name, license;
        auto& s = r.summary;
        if (affiliated) {
            const auto& field = kFields[i % kFields.size()];
            name = field + "-" + g.pick(kTools) + "-" + tag;
            const bool lab_owned = g.chance(0.8);
            owner = lab_owned ? labs[i % labs.size()] : people.front();
            owner_type = lab_owned ? "Organization" : "User";
            if (lab_owned) c.user_orgs[people.front()].push_back(owner);
            license = g.pick(kResearchLicenses);
            s["description"] = "Research software for " + field + " developed by the " + field + " lab at " + alt;
            s["homepage"] = g.chance(0.5) ? "https://" + field + "." + p.domain + "/" + name : "";
            s["topics"] = json::array({"research", field});
            std::string readme = "# " + name + "\n\nDeveloped at the " + field + " laboratory, " + p.name + ".\n";
            for (int k = 0; k < 3; ++k) readme += g.pick(kResearchSentences) + "\n";
            readme += "Contact: " + people.front() + "@" + p.domain + "\n";
            r.readme = readme;
        } else {
            const auto& thing = g.pick(kThings);
            const int style = static_cast<int>(i % 4);
            const bool org_owned = g.chance(0.2);
            owner = org_owned ? (i % 2 ? "awesome-collective" : "weekend-hackers") : people.front();
            owner_type = org_owned ? "Organization" : "User";
            license = g.pick(kHobbyLicenses);
            std::string readme = "# ";
            switch (style) {
                case 0:  // curated list mentioning the acronym
                    name = "awesome-" + thing + "-" + tag;
                    s["description"] = "A curated list of awesome " + thing + " resources, including " + p.acronym +
                                       " links";
                    s["topics"] = json::array({"awesome", "list"});
                    break;
                case 1:  // acronym appears in the name for an unrelated reason
                    name = acr + "-" + thing + "-" + tag;
                    s["description"] = "Personal " + thing + " weekend project";
                    s["topics"] = json::array({thing});
                    break;
                case 2:  // unofficial mirror naming the institution
                    name = thing + "-mirror-" + tag;
                    s["description"] = "Unofficial mirror of a " + thing + " collection";
                    s["topics"] = json::array({"mirror"});
                    readme += name + "\n\nUnofficial copy of public material that mentions " + alt + ".\n";
                    break;
                default:  // tagged with the acronym topic only
                    name = thing + "-notes-" + tag;
                    s["description"] = "My " + thing + " notes and cheatsheets";
                    s["topics"] = json::array({acr, "notes"});
                    break;
            }
            s["homepage"] = g.chance(0.3) ? "https://" + owner + ".github.io/" + name : "";
            if (readme == "# ") readme += name + "\n\n";
            for (int k = 0; k < 3; ++k) readme += g.pick(kHobbySentences) + "\n";
            r.readme = readme;
        }
        finish_repo(r, g, owner, owner_type, name, license, id);
        c.repos.push_back(std::move(r));
    }
    return c;
}

Corpus keyword_corpus(const std::string& keyword, std::size_t n_repos) {
    Gen g(7);
    Corpus c;
    for (std::size_t i = 0; i < n_repos; ++i) {
        MockRepo r;
        const std::string owner = "user" + std::to_string(i);
        c.accounts[owner] = user_account(owner, owner, "", "", "", "2016-01-01T00:00:00Z");
        r.summary["description"] = "";
        r.summary["homepage"] = "";
        r.summary["topics"] = json::array();
        finish_repo(r, g, owner, "User", keyword + "-tool-" + std::to_string(i), "NONE",
                    static_cast<std::int64_t>(500000 + i));
        c.repos.push_back(std::move(r));
    }
    return c;
}

// ---------------------------------------------------------------------------
// GitHub API.

namespace {

HttpResponse json_response(int status, const json& body) {
    HttpResponse r;
    r.status = status;
    r.body = body.dump();
    r.headers.emplace("Content-Type", "application/json");
    return r;
}

HttpResponse not_found() { return json_response(404, {{"message", "Not Found"}}); }

std::vector<std::string> path_parts(const std::string& path) {
    std::vector<std::string> parts;
    for (auto& p : text::split(path, '/'))
        if (!p.empty()) parts.push_back(text::url_decode(p));
    return parts;
}

int int_param(const ParsedTarget& t, const char* key, int fallback) {
    auto it = t.params.find(key);
    if (it == t.params.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (...) {
        return fallback;
    }
}

json page_of(const std::vector<json>& items, const ParsedTarget& t) {
    const int per_page = std::clamp(int_param(t, "per_page", 30), 1, 100);
    const int page = std::max(1, int_param(t, "page", 1));
    json out = json::array();
    const auto start = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(per_page);
    for (auto i = start; i < items.size() && i < start + static_cast<std::size_t>(per_page); ++i) out.push_back(items[i]);
    return out;
}

struct SearchTerms {
    std::string keyword;
    std::string in;
    std::string topic;
    std::string created_from, created_to;
};

SearchTerms parse_query(const std::string& q) {
    SearchTerms t;
    std::size_t i = 0;
    while (i < q.size()) {
        if (q[i] == ' ') {
            ++i;
            continue;
        }
        if (q[i] == '"') {
            const auto end = q.find('"', i + 1);
            t.keyword = text::to_lower(q.substr(i + 1, end == std::string::npos ? std::string::npos : end - i - 1));
            i = end == std::string::npos ? q.size() : end + 1;
            continue;
        }
        auto end = q.find(' ', i);
        if (end == std::string::npos) end = q.size();
        const std::string tok = q.substr(i, end - i);
        if (tok.starts_with("in:")) t.in = tok.substr(3);
        else if (tok.starts_with("topic:")) t.topic = text::to_lower(tok.substr(6));
        else if (tok.starts_with("created:")) {
            const auto range = tok.substr(8);
            const auto dots = range.find("..");
            t.created_from = range.substr(0, dots);
            t.created_to = dots == std::string::npos ? range : range.substr(dots + 2);
        } else {
            t.keyword = text::to_lower(tok);
        }
        i = end;
    }
    return t;
}

}  // namespace

MockGitHub::MockGitHub(Corpus corpus, GitHubOptions options) : corpus_(std::move(corpus)), options_(options) {
    for (std::size_t i = 0; i < corpus_.repos.size(); ++i) index_[corpus_.repos[i].summary.value("full_name", "")] = i;
}

void MockGitHub::bump(const std::string& kind) {
    std::lock_guard lock(mu_);
    ++counters_[kind];
}

std::int64_t MockGitHub::count(const std::string& kind) const {
    std::lock_guard lock(mu_);
    auto it = counters_.find(kind);
    return it == counters_.end() ? 0 : it->second;
}

std::int64_t MockGitHub::total_requests() const {
    std::lock_guard lock(mu_);
    std::int64_t n = 0;
    for (const auto& [k, v] : counters_) n += v;
    return n;
}

void MockGitHub::reset_counters() {
    std::lock_guard lock(mu_);
    counters_.clear();
}

void MockGitHub::delete_repo(const std::string& repo_id) {
    std::lock_guard lock(mu_);
    deleted_.insert(repo_id);
}

HttpResponse MockGitHub::handle(const HttpRequest& request) {
    {
        std::lock_guard lock(mu_);
        if (served_++ < options_.rate_limit_first) {
            ++counters_["rate_limited"];
            auto r = json_response(403, {{"message", "API rate limit exceeded"}});
            r.headers.emplace("X-RateLimit-Remaining", "0");
            r.headers.emplace("X-RateLimit-Reset", std::to_string(options_.rate_limit_reset));
            return r;
        }
    }
    if (request.method != "GET") return json_response(405, {{"message", "Method Not Allowed"}});
    const auto t = parse_target(request.target);
    const auto parts = path_parts(t.path);
    if (parts.size() == 2 && parts[0] == "search" && parts[1] == "repositories") return search(t);
    if (parts.size() >= 3 && parts[0] == "repos") return repo_endpoint(parts, t);
    if (parts.size() >= 2 && parts[0] == "users") return user_endpoint(parts);
    bump("other");
    return not_found();
}

HttpResponse MockGitHub::search(const ParsedTarget& t) {
    bump("search");
    auto qit = t.params.find("q");
    if (qit == t.params.end() || qit->second.empty())
        return json_response(422, {{"message", "Validation Failed"}, {"errors", json::array({"q missing"})}});
    const auto terms = parse_query(qit->second);

    auto contains = [](const std::string& hay, const std::string& needle) {
        return !needle.empty() && text::to_lower(hay).find(needle) != std::string::npos;
    };
    auto account_email = [&](const std::string& login) {
        auto it = corpus_.accounts.find(login);
        return it == corpus_.accounts.end() ? std::string() : it->second.value("email", "");
    };

    std::vector<const MockRepo*> hits;
    {
        std::lock_guard lock(mu_);
        for (const auto& r : corpus_.repos) {
            const auto& s = r.summary;
            if (deleted_.count(s.value("full_name", ""))) continue;
            bool match = false;
            if (!terms.topic.empty()) {
                for (const auto& topic : s.value("topics", json::array()))
                    if (text::to_lower(topic.get<std::string>()) == terms.topic) match = true;
            } else if (terms.in == "name") {
                match = contains(s.value("name", ""), terms.keyword);
            } else if (terms.in == "description") {
                match = contains(s.value("description", ""), terms.keyword);
            } else if (terms.in == "readme") {
                match = contains(r.readme, terms.keyword);
            } else if (terms.in == "email") {
                match = contains(account_email(s["owner"].value("login", "")), terms.keyword);
                for (const auto& c : r.contributors) match = match || contains(account_email(c.value("login", "")), terms.keyword);
            } else {
                match = contains(s.value("name", ""), terms.keyword) ||
                        contains(s.value("description", ""), terms.keyword) || contains(r.readme, terms.keyword);
            }
            if (match && !terms.created_from.empty()) {
                const auto day = s.value("created_at", "").substr(0, 10);
                match = day >= terms.created_from && day <= terms.created_to;
            }
            if (match) hits.push_back(&r);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const MockRepo* a, const MockRepo* b) {
        return a->summary.value("id", 0) < b->summary.value("id", 0);
    });

    const int per_page = std::clamp(int_param(t, "per_page", 30), 1, 100);
    const int page = std::max(1, int_param(t, "page", 1));
    const auto start = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(per_page);
    if (start >= static_cast<std::size_t>(options_.result_cap))
        return json_response(422, {{"message", "Only the first " + std::to_string(options_.result_cap) +
                                                   " search results are available"}});
    json items = json::array();
    const auto stop = std::min({hits.size(), start + static_cast<std::size_t>(per_page),
                                static_cast<std::size_t>(options_.result_cap)});
    for (auto i = start; i < stop; ++i) items.push_back(hits[i]->summary);
    return json_response(200, {{"total_count", hits.size()}, {"incomplete_results", false}, {"items", items}});
}

HttpResponse MockGitHub::repo_endpoint(const std::vector<std::string>& parts, const ParsedTarget& t) {
    const std::string repo_id = parts[1] + "/" + parts[2];
    const std::string kind = parts.size() == 3 ? "repo" : parts[3];
    bump(kind == "community" ? "community" : kind);
    const MockRepo* r = nullptr;
    {
        std::lock_guard lock(mu_);
        auto it = index_.find(repo_id);
        if (it != index_.end() && !deleted_.count(repo_id)) r = &corpus_.repos[it->second];
    }
    if (!r) return not_found();
    if (parts.size() == 3) return json_response(200, r->summary);
    if (kind == "readme") {
        if (r->readme.empty()) return not_found();
        std::string encoded = text::base64_encode(r->readme);
        std::string wrapped;
        for (std::size_t i = 0; i < encoded.size(); i += 60) wrapped += encoded.substr(i, 60) + "\n";
        return json_response(200, {{"name", "README.md"}, {"encoding", "base64"}, {"content", wrapped}});
    }
    if (kind == "community" && parts.size() == 5 && parts[4] == "profile")
        return json_response(200, {{"health_percentage", 50}, {"files", r->community_files}});
    if (kind == "releases") return json_response(200, page_of(r->releases, t));
    if (kind == "contributors") return json_response(200, page_of(r->contributors, t));
    return not_found();
}

HttpResponse MockGitHub::user_endpoint(const std::vector<std::string>& parts) {
    const bool orgs = parts.size() == 3 && parts[2] == "orgs";
    bump(orgs ? "user_orgs" : "user");
    auto it = corpus_.accounts.find(parts[1]);
    if (it == corpus_.accounts.end() || parts.size() > 3 || (parts.size() == 3 && !orgs)) return not_found();
    if (!orgs) return json_response(200, it->second);
    json list = json::array();
    if (auto o = corpus_.user_orgs.find(parts[1]); o != corpus_.user_orgs.end())
        for (const auto& login : o->second) list.push_back({{"login", login}});
    return json_response(200, list);
}

// ---------------------------------------------------------------------------
// Model services.

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) && c < 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<double> hashed_embedding(std::string_view text_in, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    for (const auto& tok : tokenize(text_in)) {
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : tok) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        v[h % dim] += ((h >> 40) & 1) ? 1.0 : -1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0)
        for (double& x : v) x /= std::sqrt(norm);
    return v;
}

HttpResponse MockEmbeddings::handle(const HttpRequest& request) {
    ++requests_;
    if (request.method != "POST") return json_response(405, {{"message", "Method Not Allowed"}});
    json body;
    try {
        body = json::parse(request.body);
    } catch (const json::exception&) {
        return json_response(400, {{"error", {{"message", "invalid JSON"}}}});
    }
    json input = body.value("input", json());
    if (input.is_string()) input = json::array({input});
    if (!input.is_array() || input.empty())
        return json_response(400, {{"error", {{"message", "input must be a non-empty list"}}}});
    json data = json::array();
    std::int64_t tokens = 0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (!input[i].is_string()) return json_response(400, {{"error", {{"message", "input items must be strings"}}}});
        const auto s = input[i].get<std::string>();
        tokens += static_cast<std::int64_t>((s.size() + 3) / 4);
        data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", hashed_embedding(s, dim_)}});
    }
    inputs_ += static_cast<std::int64_t>(input.size());
    return json_response(200, {{"object", "list"},
                               {"data", data},
                               {"model", body.value("model", "mock-embedding")},
                               {"usage", {{"prompt_tokens", tokens}, {"total_tokens", tokens}}}});
}

double MockChat::score_prompt(std::string_view prompt) {
    const std::string lower = text::to_lower(prompt);
    const auto repo_at = lower.find("information about the repository:");
    const auto ctx_at = lower.find("university context:");
    if (repo_at == std::string::npos || ctx_at == std::string::npos || ctx_at < repo_at) return 0.05;
    const std::string block = lower.substr(repo_at, ctx_at - repo_at);
    auto field = [&](const std::string& key) {
        const auto at = lower.find(key, ctx_at);
        if (at == std::string::npos) return std::string();
        const auto start = at + key.size();
        return lower.substr(start, lower.find('\n', start) - start);
    };
    const auto domain = field("university.domain: ");
    const auto name = field("university.name: ");
    const auto acronym = field("university.acronym: ");
    if (!domain.empty() && block.find(domain) != std::string::npos) return 0.92;
    if (!name.empty() && block.find(name) != std::string::npos) return 0.71;
    for (const auto& alt : text::split(field("university.alternates: "), ','))
        if (auto a = text::collapse_whitespace(alt); !a.empty() && block.find(a) != std::string::npos) return 0.64;
    if (!acronym.empty() && block.find(acronym) != std::string::npos) return 0.33;
    return 0.08;
}

HttpResponse MockChat::handle(const HttpRequest& request) {
    ++requests_;
    if (request.method != "POST") return json_response(405, {{"message", "Method Not Allowed"}});
    json body;
    try {
        body = json::parse(request.body);
    } catch (const json::exception&) {
        return json_response(400, {{"error", {{"message", "invalid JSON"}}}});
    }
    std::string prompt;
    for (const auto& m : body.value("messages", json::array()))
        if (m.value("role", "") == "user") prompt = m.value("content", "");
    std::string reply;
    if (garble_remaining_.fetch_sub(1) > 0) {
        reply = "I believe this repository is probably affiliated.";
    } else {
        const double p = score_prompt(prompt);
        reply = "Probability: " + text::fixed(p, 2) + "\nExplanation: " +
                (p >= 0.5 ? "The repository metadata references the university directly."
                          : "No direct institutional reference in the repository metadata.");
    }
    const auto prompt_tokens = static_cast<std::int64_t>((prompt.size() + 3) / 4);
    const auto completion_tokens = static_cast<std::int64_t>((reply.size() + 3) / 4);
    return json_response(200, {{"id", "mock-" + std::to_string(requests_.load())},
                               {"object", "chat.completion"},
                               {"model", body.value("model", "mock-chat")},
                               {"choices", json::array({{{"index", 0},
                                                         {"message", {{"role", "assistant"}, {"content", reply}}},
                                                         {"finish_reason", "stop"}}})},
                               {"usage",
                                {{"prompt_tokens", prompt_tokens},
                                 {"completion_tokens", completion_tokens},
                                 {"total_tokens", prompt_tokens + completion_tokens}}}});
}

MockServices::MockServices(Corpus corpus, GitHubOptions options, std::size_t embedding_dim, int chat_garble)
    : github(std::move(corpus), options), embeddings(embedding_dim), chat(chat_garble) {}

HttpResponse MockServices::handle(const HttpRequest& request) {
    const auto path = parse_target(request.target).path;
    if (path == "/v1/embeddings") return embeddings.handle(request);
    if (path == "/v1/chat/completions") return chat.handle(request);
    return github.handle(request);
}

}  // namespace repofind::mock
