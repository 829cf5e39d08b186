#include "repofind/json_io.hpp"

namespace repofind {

using ojson = nlohmann::ordered_json;

namespace {

template <typename T>
T get_or(const ojson& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

}  // namespace

void to_json(ojson& j, const MatchedQuery& m) {
    j = ojson{{"institution_id", m.institution_id}, {"attribute", to_string(m.attribute)}, {"keyword", m.keyword}};
}

void from_json(const ojson& j, MatchedQuery& m) {
    m.institution_id = j.at("institution_id").get<std::string>();
    m.attribute = search_attribute_from_string(j.at("attribute").get<std::string>());
    m.keyword = j.at("keyword").get<std::string>();
}

void to_json(ojson& j, const RepoRecord& r) {
    j = ojson::object();
    j["repo_id"] = r.repo_id;
    j["numeric_id"] = r.numeric_id;
    j["name"] = r.name;
    j["description"] = r.description;
    j["homepage"] = r.homepage;
    j["readme_text"] = r.readme_text;
    j["topics"] = r.topics;
    j["primary_language"] = r.primary_language;
    j["license_id"] = r.license_id;
    j["owner_login"] = r.owner_login;
    j["owner_kind"] = to_string(r.owner_kind);
    j["stars"] = r.stars;
    j["forks"] = r.forks;
    j["subscribers"] = r.subscribers;
    j["release_download_count"] = r.release_download_count;
    j["created_at"] = r.created_at;
    j["updated_at"] = r.updated_at;
    j["has_readme"] = r.community.has_readme;
    j["has_license"] = r.community.has_license;
    j["has_code_of_conduct"] = r.community.has_code_of_conduct;
    j["has_contributing"] = r.community.has_contributing;
    j["has_security_policy"] = r.community.has_security_policy;
    j["has_issue_template"] = r.community.has_issue_template;
    j["has_pr_template"] = r.community.has_pr_template;
    j["has_description"] = r.community.has_description;
    j["matched_queries"] = r.matched_queries;
}

void from_json(const ojson& j, RepoRecord& r) {
    r.repo_id = j.at("repo_id").get<std::string>();
    r.numeric_id = get_or<std::int64_t>(j, "numeric_id", 0);
    r.name = get_or<std::string>(j, "name", "");
    r.description = get_or<std::string>(j, "description", "");
    r.homepage = get_or<std::string>(j, "homepage", "");
    r.readme_text = get_or<std::string>(j, "readme_text", "");
    r.topics = get_or<std::vector<std::string>>(j, "topics", {});
    r.primary_language = get_or<std::string>(j, "primary_language", "");
    r.license_id = get_or<std::string>(j, "license_id", std::string(kNoLicense));
    r.owner_login = get_or<std::string>(j, "owner_login", "");
    r.owner_kind = owner_kind_from_string(get_or<std::string>(j, "owner_kind", "user"));
    r.stars = get_or<std::int64_t>(j, "stars", 0);
    r.forks = get_or<std::int64_t>(j, "forks", 0);
    r.subscribers = get_or<std::int64_t>(j, "subscribers", 0);
    r.release_download_count = get_or<std::int64_t>(j, "release_download_count", 0);
    r.created_at = get_or<std::string>(j, "created_at", "");
    r.updated_at = get_or<std::string>(j, "updated_at", "");
    r.community.has_readme = get_or<bool>(j, "has_readme", false);
    r.community.has_license = get_or<bool>(j, "has_license", false);
    r.community.has_code_of_conduct = get_or<bool>(j, "has_code_of_conduct", false);
    r.community.has_contributing = get_or<bool>(j, "has_contributing", false);
    r.community.has_security_policy = get_or<bool>(j, "has_security_policy", false);
    r.community.has_issue_template = get_or<bool>(j, "has_issue_template", false);
    r.community.has_pr_template = get_or<bool>(j, "has_pr_template", false);
    r.community.has_description = get_or<bool>(j, "has_description", false);
    r.matched_queries.clear();
    if (auto it = j.find("matched_queries"); it != j.end() && it->is_array())
        for (const auto& m : *it) r.matched_queries.push_back(m.get<MatchedQuery>());
}

void to_json(ojson& j, const ContributorRecord& c) {
    j = ojson::object();
    j["repo_id"] = c.repo_id;
    j["username"] = c.username;
    j["rank"] = c.rank;
    j["contributions"] = c.contributions;
    j["profiled"] = c.profiled;
    j["name"] = c.name;
    j["bio"] = c.bio;
    j["location"] = c.location;
    j["company"] = c.company;
    j["email"] = c.email;
    j["twitter"] = c.twitter;
    j["organizations"] = c.organizations;
}

void from_json(const ojson& j, ContributorRecord& c) {
    c.repo_id = j.at("repo_id").get<std::string>();
    c.username = j.at("username").get<std::string>();
    c.rank = get_or<int>(j, "rank", 1);
    c.contributions = get_or<std::int64_t>(j, "contributions", 0);
    c.profiled = get_or<bool>(j, "profiled", false);
    c.name = get_or<std::string>(j, "name", "");
    c.bio = get_or<std::string>(j, "bio", "");
    c.location = get_or<std::string>(j, "location", "");
    c.company = get_or<std::string>(j, "company", "");
    c.email = get_or<std::string>(j, "email", "");
    c.twitter = get_or<std::string>(j, "twitter", "");
    c.organizations = get_or<std::vector<std::string>>(j, "organizations", {});
}

void to_json(ojson& j, const OrgRecord& o) {
    j = ojson{{"login", o.login},     {"name", o.name},   {"company", o.company}, {"location", o.location},
              {"description", o.description}, {"email", o.email}, {"url", o.url}, {"created_at", o.created_at}};
}

void from_json(const ojson& j, OrgRecord& o) {
    o.login = j.at("login").get<std::string>();
    o.name = get_or<std::string>(j, "name", "");
    o.company = get_or<std::string>(j, "company", "");
    o.location = get_or<std::string>(j, "location", "");
    o.description = get_or<std::string>(j, "description", "");
    o.email = get_or<std::string>(j, "email", "");
    o.url = get_or<std::string>(j, "url", "");
    o.created_at = get_or<std::string>(j, "created_at", "");
}

void to_json(ojson& j, const LabelRecord& l) {
    j = ojson{{"repo_id", l.repo_id}, {"institution_id", l.institution_id}, {"label", l.label},
              {"labeler", l.labeler}, {"labeled_at", l.labeled_at}};
}

void from_json(const ojson& j, LabelRecord& l) {
    l.repo_id = j.at("repo_id").get<std::string>();
    l.institution_id = j.at("institution_id").get<std::string>();
    l.label = j.at("label").get<int>();
    l.labeler = get_or<std::string>(j, "labeler", "");
    l.labeled_at = get_or<std::string>(j, "labeled_at", "");
}

void to_json(ojson& j, const Prediction& p) {
    j = ojson{{"repo_id", p.repo_id},         {"institution_id", p.institution_id},
              {"classifier", to_string(p.classifier)}, {"model_tag", p.model_tag},
              {"probability", p.probability}, {"explanation", p.explanation},
              {"produced_at", p.produced_at}};
}

void from_json(const ojson& j, Prediction& p) {
    p.repo_id = j.at("repo_id").get<std::string>();
    p.institution_id = j.at("institution_id").get<std::string>();
    p.classifier = classifier_from_string(j.at("classifier").get<std::string>());
    p.model_tag = get_or<std::string>(j, "model_tag", "");
    p.probability = j.at("probability").get<double>();
    p.explanation = get_or<std::string>(j, "explanation", "");
    p.produced_at = get_or<std::string>(j, "produced_at", "");
}

void to_json(ojson& j, const InstitutionProfile& p) {
    j = ojson{{"id", p.id}, {"name", p.name}, {"acronym", p.acronym}, {"domain", p.domain},
              {"alternates", p.alternates}};
}

}  // namespace repofind
