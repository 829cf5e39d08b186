#include "repofind/insights.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "repofind/text.hpp"

namespace repofind::insights {

namespace {

// Tenths of a percent, rounded half up, computed in integers.
std::int64_t tenths(std::int64_t part, std::int64_t whole) { return (part * 2000 + whole) / (2 * whole); }

}  // namespace

std::optional<double> rate_percent(std::int64_t predicted, std::int64_t retrieved) {
    if (retrieved <= 0) return std::nullopt;
    return static_cast<double>(tenths(predicted, retrieved)) / 10.0;
}

RateTable affiliation_rates(const std::vector<std::pair<std::string, std::int64_t>>& retrieved,
                            const std::vector<Prediction>& predictions, double threshold) {
    std::map<std::pair<std::string, std::string>, const Prediction*> latest;
    for (const auto& p : predictions) {
        auto& slot = latest[{p.institution_id, p.repo_id}];
        if (!slot || p.produced_at > slot->produced_at) slot = &p;
    }
    std::map<std::string, std::int64_t> affiliated;
    for (const auto& [key, p] : latest)
        if (p->probability >= threshold) ++affiliated[key.first];

    RateTable t;
    t.totals.institution_id = "total";
    for (const auto& [inst, count] : retrieved) {
        RateRow row{inst, count, affiliated[inst], std::nullopt};
        row.percent = rate_percent(row.predicted_affiliated, row.retrieved);
        t.totals.retrieved += row.retrieved;
        t.totals.predicted_affiliated += row.predicted_affiliated;
        t.rows.push_back(std::move(row));
    }
    t.totals.percent = rate_percent(t.totals.predicted_affiliated, t.totals.retrieved);
    return t;
}

std::vector<double> largest_remainder_percents(const std::vector<std::int64_t>& counts) {
    const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    std::vector<double> out(counts.size(), 0.0);
    if (total == 0) return out;
    std::vector<std::int64_t> floor(counts.size()), rem(counts.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        floor[i] = counts[i] * 1000 / total;
        rem[i] = counts[i] * 1000 % total;
        assigned += floor[i];
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::int64_t k = 0; k < 1000 - assigned; ++k) ++floor[order[static_cast<std::size_t>(k)]];
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(floor[i]) / 10.0;
    return out;
}

namespace {

// `always` is listed even with a zero count, as long as `repos` is non-empty.
std::vector<Bucket> distribution(const std::vector<RepoRecord>& repos, auto key_of, std::string_view always = {}) {
    std::map<std::string, std::int64_t> tally;
    if (!repos.empty() && !always.empty()) tally[std::string(always)] = 0;
    for (const auto& r : repos) ++tally[key_of(r)];
    std::vector<Bucket> out;
    for (const auto& [k, n] : tally) out.push_back({k, n, 0.0});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    std::vector<std::int64_t> counts;
    for (const auto& b : out) counts.push_back(b.count);
    const auto pct = largest_remainder_percents(counts);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].percent = pct[i];
    return out;
}

}  // namespace

std::vector<Bucket> language_distribution(const std::vector<RepoRecord>& repos) {
    return distribution(repos, [](const RepoRecord& r) {
        return r.primary_language.empty() ? std::string(kNoLanguage) : r.primary_language;
    });
}

std::vector<Bucket> license_distribution(const std::vector<RepoRecord>& repos) {
    return distribution(repos, [](const RepoRecord& r) {
        return r.license_id.empty() ? std::string(kNoLicense) : r.license_id;
    }, kNoLicense);
}

std::vector<FlagRow> community_standards_report(const std::vector<RepoRecord>& repos) {
    using Field = bool CommunityFlags::*;
    const std::vector<std::pair<const char*, Field>> flags{
        {"readme", &CommunityFlags::has_readme},
        {"license", &CommunityFlags::has_license},
        {"code_of_conduct", &CommunityFlags::has_code_of_conduct},
        {"contributing", &CommunityFlags::has_contributing},
        {"security_policy", &CommunityFlags::has_security_policy},
        {"issue_template", &CommunityFlags::has_issue_template},
        {"pr_template", &CommunityFlags::has_pr_template},
        {"description", &CommunityFlags::has_description},
    };
    const auto n = static_cast<std::int64_t>(repos.size());
    std::vector<FlagRow> out;
    for (const auto& [name, field] : flags) {
        FlagRow row{name, 0, std::nullopt};
        for (const auto& r : repos) row.count += (r.community.*field) ? 1 : 0;
        row.percent = rate_percent(row.count, n);
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string format_percent(const std::optional<double>& percent) {
    return percent ? text::fixed(*percent, 1) : std::string(kUndefined);
}

namespace {

nlohmann::ordered_json percent_json(const std::optional<double>& p) {
    return p ? nlohmann::ordered_json(*p) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json rate_json(const RateRow& r) {
    return {{"institution_id", r.institution_id},
            {"retrieved", r.retrieved},
            {"predicted_affiliated", r.predicted_affiliated},
            {"percent", percent_json(r.percent)}};
}

nlohmann::ordered_json buckets_json(const std::vector<Bucket>& buckets) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& b : buckets) a.push_back({{"key", b.key}, {"count", b.count}, {"percent", b.percent}});
    return a;
}

}  // namespace

nlohmann::ordered_json to_json(const InsightReport& r) {
    auto rates = nlohmann::ordered_json::array();
    for (const auto& row : r.rates.rows) rates.push_back(rate_json(row));
    auto community = nlohmann::ordered_json::array();
    for (const auto& f : r.community)
        community.push_back({{"flag", f.flag}, {"count", f.count}, {"percent", percent_json(f.percent)}});
    nlohmann::ordered_json thresholds = nlohmann::ordered_json::object();
    for (const auto& [inst, t] : r.thresholds) thresholds[inst] = t;
    return {{"classifier", r.classifier},
            {"threshold", r.threshold},
            {"thresholds", thresholds},
            {"affiliation_rates", rates},
            {"totals", rate_json(r.rates.totals)},
            {"affiliated_repos", r.affiliated_repos},
            {"languages", buckets_json(r.languages)},
            {"licenses", buckets_json(r.licenses)},
            {"community", community}};
}

std::string to_text(const InsightReport& r) {
    std::string out = "Predicted affiliated repositories (" + r.classifier + ", p >= " + text::fixed(r.threshold, 3) +
                      ")\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : r.rates.rows)
        rows.push_back({row.institution_id, std::to_string(row.retrieved), std::to_string(row.predicted_affiliated),
                        format_percent(row.percent)});
    const auto& t = r.rates.totals;
    rows.push_back({"Total", std::to_string(t.retrieved), std::to_string(t.predicted_affiliated),
                    format_percent(t.percent)});
    out += text::format_table({"Institution", "Retrieved", "Affiliated", "Percent"}, rows, {1, 2, 3});
    for (const auto& [inst, t] : r.thresholds) out += "threshold for " + inst + ": p >= " + text::fixed(t, 3) + "\n";

    auto section = [&](const std::string& title, const std::vector<Bucket>& buckets) {
        std::vector<std::vector<std::string>> b;
        for (const auto& x : buckets) b.push_back({x.key, std::to_string(x.count), text::fixed(x.percent, 1)});
        out += "\n" + title + " (" + std::to_string(r.affiliated_repos) + " repositories)\n";
        out += text::format_table({title, "Count", "Percent"}, b, {1, 2});
    };
    section("Language", r.languages);
    section("License", r.licenses);

    std::vector<std::vector<std::string>> c;
    for (const auto& f : r.community) c.push_back({f.flag, std::to_string(f.count), format_percent(f.percent)});
    out += "\nCommunity files\n";
    out += text::format_table({"File", "Count", "Percent"}, c, {1, 2});
    return out;
}

std::string to_csv(const InsightReport& r) {
    std::string out = text::csv_row({"section", "key", "retrieved", "count", "percent"});
    auto pct = [](const std::optional<double>& p) { return p ? text::fixed(*p, 1) : std::string(); };
    for (const auto& row : r.rates.rows)
        out += text::csv_row({"rates", row.institution_id, std::to_string(row.retrieved),
                              std::to_string(row.predicted_affiliated), pct(row.percent)});
    out += text::csv_row({"rates", "total", std::to_string(r.rates.totals.retrieved),
                          std::to_string(r.rates.totals.predicted_affiliated), pct(r.rates.totals.percent)});
    for (const auto& b : r.languages)
        out += text::csv_row({"language", b.key, "", std::to_string(b.count), text::fixed(b.percent, 1)});
    for (const auto& b : r.licenses)
        out += text::csv_row({"license", b.key, "", std::to_string(b.count), text::fixed(b.percent, 1)});
    for (const auto& f : r.community)
        out += text::csv_row({"community", f.flag, "", std::to_string(f.count), pct(f.percent)});
    return out;
}

}  // namespace repofind::insights
