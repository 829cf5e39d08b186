#include "repofind/sbc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "repofind/text.hpp"

namespace repofind::sbc {

std::string_view to_string(Component c) {
    switch (c) {
        case Component::repo: return "repo";
        case Component::org: return "org";
        case Component::contributor: return "contributor";
    }
    return "repo";
}

std::string_view to_string(Criterion c) { return c == Criterion::domain ? "domain" : "keyword"; }

const std::vector<std::string>& known_attributes(Component c) {
    static const std::vector<std::string> repo{"homepage", "readme", "description", "name"};
    static const std::vector<std::string> org{"url", "email", "name", "description", "company"};
    static const std::vector<std::string> contributor{"email", "name", "bio", "company"};
    switch (c) {
        case Component::repo: return repo;
        case Component::org: return org;
        case Component::contributor: return contributor;
    }
    return repo;
}

ScoreWeightTable ScoreWeightTable::defaults() {
    ScoreWeightTable t;
    t.set({Component::repo, "homepage", Criterion::domain}, 1.0);
    for (const char* a : {"readme", "description", "name"}) t.set({Component::repo, a, Criterion::keyword}, 0.20);
    t.set({Component::org, "url", Criterion::domain}, 1.0);
    t.set({Component::org, "email", Criterion::domain}, 1.0);
    for (const char* a : {"name", "description", "company"}) t.set({Component::org, a, Criterion::keyword}, 0.30);
    for (const char* a : {"email", "name", "bio", "company"}) {
        t.set({Component::contributor, a, Criterion::domain}, 0.50);
        t.set({Component::contributor, a, Criterion::keyword}, 0.20);
    }
    return t;
}

namespace {

Component component_from(const std::string& s) {
    if (s == "repo") return Component::repo;
    if (s == "org") return Component::org;
    if (s == "contributor") return Component::contributor;
    throw ConfigError("sbc_weights: unknown component '" + s + "'");
}

Criterion criterion_from(const std::string& s) {
    if (s == "domain") return Criterion::domain;
    if (s == "keyword") return Criterion::keyword;
    throw ConfigError("sbc_weights: unknown criterion '" + s + "'");
}

}  // namespace

ScoreWeightTable ScoreWeightTable::from_config(std::string_view yaml_document) {
    ScoreWeightTable t = defaults();
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_document));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (!root.IsMap() || !root["sbc_weights"]) return t;
    const auto list = root["sbc_weights"];
    if (!list.IsSequence()) throw ConfigError("sbc_weights must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& e = list[i];
        const auto at = "sbc_weights[" + std::to_string(i) + "]";
        for (const char* field : {"component", "attribute", "criterion", "weight"})
            if (!e[field]) throw ConfigError(at + ": field '" + field + "' is missing");
        try {
            WeightKey key{component_from(e["component"].as<std::string>()), e["attribute"].as<std::string>(),
                          criterion_from(e["criterion"].as<std::string>())};
            t.set(key, e["weight"].as<double>());
        } catch (const YAML::Exception& ex) {
            throw ConfigError(at + ": " + ex.what());
        } catch (const ConfigError& ex) {
            throw ConfigError(at + ": " + ex.what());
        }
    }
    return t;
}

void ScoreWeightTable::set(const WeightKey& key, double weight) {
    const auto& attrs = known_attributes(key.component);
    if (std::find(attrs.begin(), attrs.end(), key.attribute) == attrs.end())
        throw ConfigError("unknown attribute '" + key.attribute + "' for component '" +
                          std::string(to_string(key.component)) + "'");
    if (!(weight >= 0.0 && weight <= 1.0))
        throw ConfigError("weight for " + std::string(to_string(key.component)) + "." + key.attribute + "/" +
                          std::string(to_string(key.criterion)) + " must lie in [0,1]");
    entries_[key] = weight;
}

double ScoreWeightTable::weight(const WeightKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------

namespace {

bool is_boundary(unsigned char c) { return c < 0x80 && (std::isspace(c) || std::ispunct(c)); }

bool contains_token(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return false;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || is_boundary(static_cast<unsigned char>(hay[pos - 1]));
        const auto end = pos + needle.size();
        const bool right = end == hay.size() || is_boundary(static_cast<unsigned char>(hay[end]));
        if (left && right) return true;
    }
    return false;
}

bool contains_phrase(std::string_view hay, std::string_view phrase) {
    const auto needle = text::to_lower(text::collapse_whitespace(phrase));
    return !needle.empty() && hay.find(needle) != std::string_view::npos;
}

}  // namespace

bool match_attribute(std::string_view value, const InstitutionProfile& profile, Criterion criterion) {
    if (value.empty()) return false;
    if (criterion == Criterion::domain) {
        const auto domain = text::to_lower(profile.domain);
        return !domain.empty() && text::to_lower(value).find(domain) != std::string::npos;
    }
    const auto hay = text::to_lower(text::collapse_whitespace(value));
    if (contains_phrase(hay, profile.name)) return true;
    for (const auto& alt : profile.alternates)
        if (contains_phrase(hay, alt)) return true;
    return contains_token(hay, text::to_lower(profile.acronym));
}

namespace {

std::string_view repo_field(const RepoRecord& r, const std::string& a) {
    if (a == "homepage") return r.homepage;
    if (a == "readme") return r.readme_text;
    if (a == "description") return r.description;
    return r.name;
}

std::string_view org_field(const OrgRecord& o, const std::string& a) {
    if (a == "url") return o.url;
    if (a == "email") return o.email;
    if (a == "name") return o.name;
    if (a == "description") return o.description;
    return o.company;
}

std::string_view contributor_field(const ContributorRecord& c, const std::string& a) {
    if (a == "email") return c.email;
    if (a == "name") return c.name;
    if (a == "bio") return c.bio;
    return c.company;
}

}  // namespace

MatchReport score_repository(const RepoRecord& repo, const OrgRecord* org, const std::vector<ContributorRecord>& top2,
                             const InstitutionProfile& profile, const ScoreWeightTable& weights) {
    if (top2.size() > 2) throw InputError("at most two contributors may be scored");
    for (const auto& c : top2)
        if (c.rank < 1 || c.rank > 2)
            throw InputError("contributor " + c.username + " has rank " + std::to_string(c.rank) + ", expected 1 or 2");

    // Sums run in integer micro-units so the total does not depend on hit order.
    MatchReport report;
    std::int64_t micro = 0;
    auto consider = [&](const WeightKey& key, std::string_view value, int rank, double w) {
        if (w <= 0.0 || !match_attribute(value, profile, key.criterion)) return;
        report.hits.push_back({key.component, key.attribute, key.criterion, rank, std::string(value), w});
        micro += std::llround(w * 1e6);
    };

    for (const auto& [key, w] : weights.entries()) {
        switch (key.component) {
            case Component::repo: consider(key, repo_field(repo, key.attribute), 0, w); break;
            case Component::org:
                if (org) consider(key, org_field(*org, key.attribute), 0, w);
                break;
            case Component::contributor:
                for (const auto& c : top2) consider(key, contributor_field(c, key.attribute), c.rank, w);
                break;
        }
    }
    std::sort(report.hits.begin(), report.hits.end(), [](const Hit& a, const Hit& b) {
        return std::tie(a.component, a.contributor_rank, a.attribute, a.criterion) <
               std::tie(b.component, b.contributor_rank, b.attribute, b.criterion);
    });
    report.raw_sum = static_cast<double>(micro) / 1e6;
    report.total = std::min(report.raw_sum, 1.0);
    return report;
}

std::string explain(const MatchReport& report) {
    if (report.hits.empty()) return "no institution keyword or domain found";
    std::ostringstream out;
    for (std::size_t i = 0; i < report.hits.size(); ++i) {
        const auto& h = report.hits[i];
        if (i) out << '\n';
        out << to_string(h.component);
        if (h.contributor_rank) out << h.contributor_rank;
        out << '.' << h.attribute << '/' << to_string(h.criterion) << " +" << text::fixed(h.weight, 2);
    }
    return out.str();
}

}  // namespace repofind::sbc
