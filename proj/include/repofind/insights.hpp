#pragma once

// Descriptive reports over the repositories a classifier predicts as
// affiliated: per-institution rates and language, license and
// community-file distributions.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"

namespace repofind::insights {

inline constexpr std::string_view kUndefined = "\xE2\x80\x94";  // em dash, shown for 0/0
inline constexpr std::string_view kNoLanguage = "none";

struct RateRow {
    std::string institution_id;
    std::int64_t retrieved = 0;
    std::int64_t predicted_affiliated = 0;
    std::optional<double> percent;  // one decimal; absent when retrieved == 0

    friend bool operator==(const RateRow&, const RateRow&) = default;
};

struct RateTable {
    std::vector<RateRow> rows;
    RateRow totals;  // institution_id "total"
};

/// percent = predicted / retrieved * 100, rounded half away from zero to one decimal.
std::optional<double> rate_percent(std::int64_t predicted, std::int64_t retrieved);

/// `retrieved` lists (institution_id, retrieved count) in display order;
/// predictions at or above `threshold` count as affiliated (one per repo).
RateTable affiliation_rates(const std::vector<std::pair<std::string, std::int64_t>>& retrieved,
                            const std::vector<Prediction>& predictions, double threshold);

struct Bucket {
    std::string key;
    std::int64_t count = 0;
    double percent = 0.0;  // one decimal, adjusted so the column sums to 100.0

    friend bool operator==(const Bucket&, const Bucket&) = default;
};

/// Count-descending, then key ascending. Empty language -> "none".
std::vector<Bucket> language_distribution(const std::vector<RepoRecord>& repos);
/// Empty license -> "NONE"; the NONE bucket is listed even when its count is 0.
std::vector<Bucket> license_distribution(const std::vector<RepoRecord>& repos);

/// Rounds shares of `counts` to one decimal with the largest-remainder method,
/// so the results sum to exactly 100.0 (in tenths). Empty input -> empty output.
std::vector<double> largest_remainder_percents(const std::vector<std::int64_t>& counts);

struct FlagRow {
    std::string flag;  // "readme", "license", ...
    std::int64_t count = 0;
    std::optional<double> percent;  // absent for an empty set

    friend bool operator==(const FlagRow&, const FlagRow&) = default;
};

/// One row per community flag in CommunityFlags declaration order.
std::vector<FlagRow> community_standards_report(const std::vector<RepoRecord>& repos);

struct InsightReport {
    std::string classifier;
    double threshold = 0.0;  // applied where no per-institution threshold is given
    std::map<std::string, double> thresholds;  // per institution, when they differ from `threshold`
    RateTable rates;
    std::int64_t affiliated_repos = 0;
    std::vector<Bucket> languages;
    std::vector<Bucket> licenses;
    std::vector<FlagRow> community;
};

nlohmann::ordered_json to_json(const InsightReport& report);
std::string to_text(const InsightReport& report);
/// Sections as CSV: section,key,count,percent (plus retrieved for rates).
std::string to_csv(const InsightReport& report);

std::string format_percent(const std::optional<double>& percent);

}  // namespace repofind::insights
