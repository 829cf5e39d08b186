#include "repofind/core.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace repofind {

namespace detail {
// Generated from config/institutions.yaml at configure time.
extern const char* const kDefaultConfigDocument;
}  // namespace detail

namespace {

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

[[noreturn]] void config_fail(std::string_view profile, std::string_view field, std::string_view what) {
    std::ostringstream msg;
    msg << "institution profile '" << (profile.empty() ? "<unnamed>" : profile) << "': field '" << field
        << "' " << what;
    throw ConfigError(msg.str());
}

std::string required_scalar(const YAML::Node& node, const std::string& profile, const char* field) {
    const YAML::Node value = node[field];
    if (!value || value.IsNull()) config_fail(profile, field, "is missing");
    if (!value.IsScalar()) config_fail(profile, field, "must be a string");
    return value.as<std::string>();
}

}  // namespace

void validate(const InstitutionProfile& p) {
    if (p.id.empty() || has_whitespace(p.id)) config_fail(p.id, "id", "must be a non-empty token");
    if (is_blank(p.name)) config_fail(p.id, "name", "must not be empty");
    if (p.acronym.empty() || has_whitespace(p.acronym))
        config_fail(p.id, "acronym", "must be non-empty and contain no whitespace");
    if (p.domain.empty() || p.domain.find('.') == std::string::npos)
        config_fail(p.id, "domain", "must contain at least one dot");
    if (std::any_of(p.domain.begin(), p.domain.end(), [](unsigned char c) { return std::isupper(c) != 0; }))
        config_fail(p.id, "domain", "must be lowercase");
    if (p.alternates.empty()) config_fail(p.id, "alternates", "must list at least one alternate name");
    for (const auto& alt : p.alternates)
        if (is_blank(alt)) config_fail(p.id, "alternates", "contains an empty entry");
}

void validate(const RepoRecord& r) {
    auto fail = [&](std::string_view what) {
        throw DataError("repo '" + r.repo_id + "': " + std::string(what));
    };
    if (r.repo_id.find('/') == std::string::npos) fail("repo_id must be owner/name");
    if (r.stars < 0 || r.forks < 0 || r.subscribers < 0 || r.release_download_count < 0)
        fail("counts must be non-negative");
    if (r.community.has_description != !r.description.empty())
        fail("has_description disagrees with description");
    if (r.community.has_readme != !r.readme_text.empty()) fail("has_readme disagrees with readme_text");
    if (r.license_id.empty()) fail("license_id must be an SPDX id or NONE");
}

std::string_view to_string(OwnerKind kind) {
    return kind == OwnerKind::organization ? "organization" : "user";
}

OwnerKind owner_kind_from_string(std::string_view text) {
    if (text == "organization" || text == "Organization") return OwnerKind::organization;
    if (text == "user" || text == "User") return OwnerKind::user;
    throw DataError("unknown owner kind '" + std::string(text) + "'");
}

std::string_view to_string(SearchAttribute attr) {
    switch (attr) {
        case SearchAttribute::name: return "name";
        case SearchAttribute::description: return "description";
        case SearchAttribute::readme: return "readme";
        case SearchAttribute::topics: return "topics";
        case SearchAttribute::email: return "email";
    }
    return "name";
}

SearchAttribute search_attribute_from_string(std::string_view text) {
    for (auto a : {SearchAttribute::name, SearchAttribute::description, SearchAttribute::readme,
                   SearchAttribute::topics, SearchAttribute::email})
        if (to_string(a) == text) return a;
    throw DataError("unknown search attribute '" + std::string(text) + "'");
}

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::sbc: return "sbc";
        case ClassifierKind::svm: return "svm";
        case ClassifierKind::llm: return "llm";
    }
    return "sbc";
}

ClassifierKind classifier_from_string(std::string_view text) {
    if (text == "sbc") return ClassifierKind::sbc;
    if (text == "svm") return ClassifierKind::svm;
    if (text == "llm") return ClassifierKind::llm;
    throw InputError("unknown classifier '" + std::string(text) + "' (expected sbc, svm or llm)");
}

std::vector<InstitutionProfile> load_institution_profiles(std::string_view document) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config document does not parse: ") + e.what());
    }
    if (!root || root.IsNull()) throw ConfigError("config document is empty");
    if (!root.IsMap()) throw ConfigError("config document must be a mapping with an 'institutions' list");
    const YAML::Node list = root["institutions"];
    if (!list || !list.IsSequence() || list.size() == 0)
        throw ConfigError("config document has no 'institutions' list");

    std::vector<InstitutionProfile> profiles;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const YAML::Node node = list[i];
        std::string label = "#" + std::to_string(i + 1);
        if (!node.IsMap()) config_fail(label, "<entry>", "must be a mapping");
        if (node["id"] && node["id"].IsScalar()) label = node["id"].as<std::string>();

        InstitutionProfile p;
        p.id = required_scalar(node, label, "id");
        p.name = required_scalar(node, label, "name");
        p.acronym = required_scalar(node, label, "acronym");
        p.domain = required_scalar(node, label, "domain");
        const YAML::Node alts = node["alternates"];
        if (!alts || alts.IsNull()) config_fail(label, "alternates", "is missing");
        if (alts.IsScalar()) {
            p.alternates.push_back(alts.as<std::string>());
        } else if (alts.IsSequence()) {
            for (const auto& a : alts) {
                if (!a.IsScalar()) config_fail(label, "alternates", "entries must be strings");
                p.alternates.push_back(a.as<std::string>());
            }
        } else {
            config_fail(label, "alternates", "must be a list of strings");
        }
        validate(p);
        if (std::any_of(profiles.begin(), profiles.end(), [&](const auto& q) { return q.id == p.id; }))
            config_fail(p.id, "id", "is declared twice");
        profiles.push_back(std::move(p));
    }
    return profiles;
}

std::vector<InstitutionProfile> load_institution_profiles_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_institution_profiles(buf.str());
}

std::string serialize_institution_profiles(const std::vector<InstitutionProfile>& profiles) {
    YAML::Emitter out;
    out << YAML::BeginMap << YAML::Key << "institutions" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : profiles) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << p.id;
        out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << p.name;
        out << YAML::Key << "acronym" << YAML::Value << YAML::DoubleQuoted << p.acronym;
        out << YAML::Key << "domain" << YAML::Value << YAML::DoubleQuoted << p.domain;
        out << YAML::Key << "alternates" << YAML::Value << YAML::BeginSeq;
        for (const auto& a : p.alternates) out << YAML::DoubleQuoted << a;
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string_view default_config_document() { return detail::kDefaultConfigDocument; }

std::vector<InstitutionProfile> default_institution_profiles() {
    return load_institution_profiles(default_config_document());
}

const InstitutionProfile& find_profile(const std::vector<InstitutionProfile>& profiles, std::string_view id) {
    auto it = std::find_if(profiles.begin(), profiles.end(), [&](const auto& p) { return p.id == id; });
    if (it == profiles.end()) throw NotFoundError("unknown institution '" + std::string(id) + "'");
    return *it;
}

std::string_view affiliation_definition_text() {
    static constexpr std::string_view text =
        "A repository is considered to be affiliated with a university if it satisfies any of the "
        "following criteria:\n"
        "\n"
        "1. Research Group Affiliation: Developed or maintained by a research group, academic "
        "department, research center, or lab that is officially part of the university.\n"
        "\n"
        "2. Contributor Affiliation: One or more key contributors (maintainers, primary committers) "
        "are students, faculty, researchers, or university staff. Evidence includes: (1) Public "
        "profiles listing the university, (2) University email addresses, (3) Project documentation "
        "or repository metadata.\n"
        "\n"
        "3. Institutional Development: Developed by an institutional unit of the university (e.g. "
        "libraries, OSPOs, IT departments, administrative offices).\n"
        "\n"
        "4. Official Sponsorship or Ownership: Sponsored, endorsed or owned by the university, as "
        "indicated by the ownership of the GitHub organization, README mentions, or associated "
        "websites.\n"
        "\n"
        "5. Educational Outreach and Online Courses: Online learning initiatives affiliated with the "
        "university, including: (1) Repositories linked to online specializations, or courses "
        "offered on platforms like Coursera, edX, or similar (2) Course materials, code examples, or "
        "tools developed specifically for such offerings.";
    return text;
}

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace repofind
