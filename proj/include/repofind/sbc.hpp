#pragma once

// Score-based classifier: binary keyword/domain hits over repository,
// owning organization and top-two contributor attributes, weighted and
// summed with a cap at 1.

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "repofind/core.hpp"

namespace repofind::sbc {

enum class Component { repo, org, contributor };
enum class Criterion { domain, keyword };

std::string_view to_string(Component c);
std::string_view to_string(Criterion c);

struct WeightKey {
    Component component{Component::repo};
    std::string attribute;
    Criterion criterion{Criterion::domain};

    friend auto operator<=>(const WeightKey&, const WeightKey&) = default;
};

/// Attributes the scorer knows how to read, per component.
const std::vector<std::string>& known_attributes(Component c);

class ScoreWeightTable {
public:
    /// The published default table.
    static ScoreWeightTable defaults();
    /// Defaults with any `sbc_weights:` entries of a config document applied.
    /// Throws ConfigError on unknown components/attributes or weights outside [0,1].
    static ScoreWeightTable from_config(std::string_view yaml_document);

    void set(const WeightKey& key, double weight);
    double weight(const WeightKey& key) const;
    const std::map<WeightKey, double>& entries() const { return entries_; }

private:
    std::map<WeightKey, double> entries_;
};

/// Case-insensitive test of one attribute value against a profile.
/// domain: substring on the domain. keyword: substring on the name or any
/// alternate (whitespace collapsed), or the acronym bounded by start/end,
/// whitespace or ASCII punctuation on both sides.
bool match_attribute(std::string_view text, const InstitutionProfile& profile, Criterion criterion);

struct Hit {
    Component component{Component::repo};
    std::string attribute;
    Criterion criterion{Criterion::domain};
    int contributor_rank = 0;  // 1 or 2 for contributor hits
    std::string matched_text;  // the attribute value that matched
    double weight = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

struct MatchReport {
    std::vector<Hit> hits;
    double raw_sum = 0.0;  // weights summed in 1e-6 units
    double total = 0.0;  // min(raw_sum, 1)

    friend bool operator==(const MatchReport&, const MatchReport&) = default;
};

/// `top2` must only hold rank 1 and rank 2 contributors (InputError otherwise).
MatchReport score_repository(const RepoRecord& repo, const OrgRecord* org,
                             const std::vector<ContributorRecord>& top2, const InstitutionProfile& profile,
                             const ScoreWeightTable& weights = ScoreWeightTable::defaults());

/// One line per hit, for Prediction::explanation.
std::string explain(const MatchReport& report);

}  // namespace repofind::sbc
