#include "repofind/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "repofind/text.hpp"

namespace repofind::eval {

using ojson = nlohmann::ordered_json;

void validate(const ScoredSet& set) {
    for (const auto& e : set) {
        if (!(e.probability >= 0.0 && e.probability <= 1.0))
            throw InputError("scored entry " + e.repo_id + ": probability outside [0,1]");
        if (e.label != 0 && e.label != 1) throw InputError("scored entry " + e.repo_id + ": label must be 0 or 1");
    }
}

namespace {

struct ClassCounts {
    std::int64_t pos = 0;
    std::int64_t neg = 0;
};

ClassCounts count_classes(const ScoredSet& set) {
    ClassCounts c;
    for (const auto& e : set) (e.label == 1 ? c.pos : c.neg)++;
    return c;
}

ClassCounts require_both_classes(const ScoredSet& set) {
    validate(set);
    const auto c = count_classes(set);
    if (c.pos == 0 || c.neg == 0)
        throw MetricError("ROC needs both classes (positives " + std::to_string(c.pos) + ", negatives " +
                          std::to_string(c.neg) + ")");
    return c;
}

// Cumulative (threshold, tp, fp) after each distinct score, descending.
struct Step {
    double threshold;
    std::int64_t tp;
    std::int64_t fp;
};

std::vector<Step> sweep(const ScoredSet& set) {
    std::vector<std::pair<double, int>> sorted;
    sorted.reserve(set.size());
    for (const auto& e : set) sorted.emplace_back(e.probability, e.label);
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Step> steps;
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].first;
        for (; i < sorted.size() && sorted[i].first == t; ++i) (sorted[i].second == 1 ? tp : fp)++;
        steps.push_back({t, tp, fp});
    }
    return steps;
}

}  // namespace

std::vector<RocPoint> roc_curve(const ScoredSet& set) {
    const auto c = require_both_classes(set);
    std::vector<RocPoint> roc{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    for (const auto& s : sweep(set))
        roc.push_back({static_cast<double>(s.fp) / static_cast<double>(c.neg),
                       static_cast<double>(s.tp) / static_cast<double>(c.pos), s.threshold});
    return roc;
}

double trapezoid_auc(const std::vector<RocPoint>& roc) {
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i)
        area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
    return area;
}

EvalReport roc_auc(const ScoredSet& set) {
    const auto c = require_both_classes(set);
    EvalReport r;
    r.n_pos = c.pos;
    r.n_neg = c.neg;
    r.roc = roc_curve(set);
    r.auc = trapezoid_auc(r.roc);
    return r;
}

std::pair<double, double> optimal_threshold(const ScoredSet& set) {
    const auto c = require_both_classes(set);
    // J compared exactly as tp*N - fp*P (the common positive factor 1/(P*N) dropped).
    std::optional<Step> best;
    std::int64_t best_key = 0;
    for (const auto& s : sweep(set)) {
        const std::int64_t key = s.tp * c.neg - s.fp * c.pos;
        if (!best || key > best_key ||
            (key == best_key && (s.tp > best->tp || (s.tp == best->tp && s.threshold < best->threshold)))) {
            best = s;
            best_key = key;
        }
    }
    const double j = static_cast<double>(best->tp) / static_cast<double>(c.pos) -
                     static_cast<double>(best->fp) / static_cast<double>(c.neg);
    return {best->threshold, j};
}

ThresholdMetrics threshold_metrics(const ScoredSet& set, double threshold) {
    validate(set);
    ThresholdMetrics m;
    auto& k = m.confusion;
    for (const auto& e : set) {
        const bool predicted = e.probability >= threshold;
        if (e.label == 1) (predicted ? k.tp : k.fn)++;
        else (predicted ? k.fp : k.tn)++;
    }
    const auto n = static_cast<double>(set.size());
    m.accuracy = set.empty() ? 0.0 : static_cast<double>(k.tp + k.tn) / n;
    m.precision = (k.tp + k.fp) ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp) : 0.0;
    m.recall = (k.tp + k.fn) ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

EvalReport evaluate(const ScoredSet& set) {
    EvalReport r = roc_auc(set);
    std::tie(r.optimal_threshold, r.youden_j) = optimal_threshold(set);
    r.metrics = threshold_metrics(set, r.optimal_threshold);
    return r;
}

// -- sampling -------------------------------------------------------------------

std::vector<LabelRecord> consolidate_labels(const std::vector<LabelRecord>& labels) {
    std::map<std::pair<std::string, std::string>, LabelRecord> latest;
    for (const auto& l : labels) {
        const auto key = std::make_pair(l.repo_id, l.institution_id);
        auto it = latest.find(key);
        if (it == latest.end() || std::tie(l.labeled_at, l.labeler) > std::tie(it->second.labeled_at, it->second.labeler))
            latest[key] = l;
    }
    std::vector<LabelRecord> out;
    out.reserve(latest.size());
    for (auto& [k, l] : latest) out.push_back(std::move(l));
    return out;
}

namespace {

std::vector<LabelRecord> institution_pool(const std::vector<LabelRecord>& pool, const std::string& inst,
                                          const std::set<std::string>& exclude) {
    std::vector<LabelRecord> out;
    std::set<std::string> seen;
    for (const auto& l : pool) {
        if (l.institution_id != inst || exclude.count(l.repo_id)) continue;
        if (!seen.insert(l.repo_id).second)
            throw InputError("label pool lists repo " + l.repo_id + " more than once; consolidate labels first");
        out.push_back(l);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.repo_id < b.repo_id; });
    return out;
}

std::vector<LabelRecord> draw(const std::vector<LabelRecord>& sorted_pool, std::size_t n, std::mt19937_64& rng) {
    std::vector<LabelRecord> out;
    out.reserve(n);
    std::sample(sorted_pool.begin(), sorted_pool.end(), std::back_inserter(out), n, rng);
    return out;
}

}  // namespace

std::vector<LabelRecord> sample_training_set(const std::vector<LabelRecord>& pool, const std::string& inst,
                                             std::size_t n, std::uint64_t seed) {
    const auto sorted = institution_pool(pool, inst, {});
    if (sorted.size() < n)
        throw SamplingError("training sample for " + inst + " needs " + std::to_string(n) + " labeled repos, pool has " +
                            std::to_string(sorted.size()));
    std::mt19937_64 rng(seed);
    return draw(sorted, n, rng);
}

std::vector<LabelRecord> build_balanced_test_set(const std::vector<LabelRecord>& pool, const std::string& inst,
                                                 std::size_t n_per_class, std::uint64_t seed,
                                                 const std::vector<std::string>& exclude) {
    const auto sorted = institution_pool(pool, inst, {exclude.begin(), exclude.end()});
    std::vector<LabelRecord> pos, neg;
    for (const auto& l : sorted) (l.label == 1 ? pos : neg).push_back(l);
    if (pos.size() < n_per_class || neg.size() < n_per_class)
        throw SamplingError("balanced test set for " + inst + " needs " + std::to_string(n_per_class) +
                            " per class outside the training set; have " + std::to_string(pos.size()) +
                            " positive and " + std::to_string(neg.size()) + " negative");
    std::mt19937_64 rng(seed);
    auto out = draw(pos, n_per_class, rng);
    auto negatives = draw(neg, n_per_class, rng);
    out.insert(out.end(), negatives.begin(), negatives.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.repo_id < b.repo_id; });
    return out;
}

// -- cost -------------------------------------------------------------------------

std::int64_t estimate_tokens(double chars) {
    if (chars < 0) throw InputError("character count must be non-negative");
    return static_cast<std::int64_t>(std::ceil(chars / 4.0));
}

CostEstimate estimate_cost(const std::string& model_tag, double avg_chars, std::int64_t output_tokens,
                           const Prices& prices, std::int64_t n_items, std::optional<double> seconds_per_item) {
    if (!(prices.input_per_1k > 0.0)) throw InputError("input price must be positive");
    if (!(prices.output_per_1k >= 0.0)) throw InputError("output price must be non-negative");
    if (output_tokens < 0 || n_items < 0) throw InputError("token and item counts must be non-negative");
    CostEstimate c;
    c.model_tag = model_tag;
    c.avg_chars = avg_chars;
    c.input_tokens = estimate_tokens(avg_chars);
    c.output_tokens = output_tokens;
    c.prices = prices;
    c.input_cost_per_item = static_cast<double>(c.input_tokens) / 1000.0 * prices.input_per_1k;
    c.output_cost_per_item = static_cast<double>(c.output_tokens) / 1000.0 * prices.output_per_1k;
    c.cost_per_item = c.input_cost_per_item + c.output_cost_per_item;
    c.n_items = n_items;
    c.total_cost = c.cost_per_item * static_cast<double>(n_items);
    c.seconds_per_item = seconds_per_item;
    if (seconds_per_item) c.total_seconds = *seconds_per_item * static_cast<double>(n_items);
    return c;
}

// -- export -------------------------------------------------------------------------

namespace {

ojson threshold_json(double t) { return std::isinf(t) ? ojson(nullptr) : ojson(t); }

}  // namespace

ojson to_json(const EvalReport& r) {
    ojson roc = ojson::array();
    for (const auto& p : r.roc) roc.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", threshold_json(p.threshold)}});
    const auto& k = r.metrics.confusion;
    return ojson{{"institution_id", r.institution_id},
                 {"classifier", r.classifier},
                 {"model_tag", r.model_tag},
                 {"seed", r.seed},
                 {"n_pos", r.n_pos},
                 {"n_neg", r.n_neg},
                 {"auc", r.auc},
                 {"optimal_threshold", r.optimal_threshold},
                 {"youden_j", r.youden_j},
                 {"accuracy", r.metrics.accuracy},
                 {"precision", r.metrics.precision},
                 {"recall", r.metrics.recall},
                 {"f1", r.metrics.f1},
                 {"confusion", {{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}, {"tn", k.tn}}},
                 {"roc", roc}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.institution_id = j.at("institution_id").get<std::string>();
        r.classifier = j.at("classifier").get<std::string>();
        r.model_tag = j.at("model_tag").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.n_pos = j.at("n_pos").get<std::int64_t>();
        r.n_neg = j.at("n_neg").get<std::int64_t>();
        r.auc = j.at("auc").get<double>();
        r.optimal_threshold = j.at("optimal_threshold").get<double>();
        r.youden_j = j.at("youden_j").get<double>();
        r.metrics.accuracy = j.at("accuracy").get<double>();
        r.metrics.precision = j.at("precision").get<double>();
        r.metrics.recall = j.at("recall").get<double>();
        r.metrics.f1 = j.at("f1").get<double>();
        const auto& k = j.at("confusion");
        r.metrics.confusion = {k.at("tp").get<std::int64_t>(), k.at("fp").get<std::int64_t>(),
                               k.at("fn").get<std::int64_t>(), k.at("tn").get<std::int64_t>()};
        for (const auto& p : j.at("roc")) {
            const auto& t = p.at("threshold");
            r.roc.push_back({p.at("fpr").get<double>(), p.at("tpr").get<double>(),
                             t.is_null() ? std::numeric_limits<double>::infinity() : t.get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
}

ojson to_json(const CostEstimate& c) {
    ojson j{{"model_tag", c.model_tag},
            {"avg_chars", c.avg_chars},
            {"input_tokens", c.input_tokens},
            {"output_tokens", c.output_tokens},
            {"price_input_per_1k", c.prices.input_per_1k},
            {"price_output_per_1k", c.prices.output_per_1k},
            {"input_cost_per_item", c.input_cost_per_item},
            {"output_cost_per_item", c.output_cost_per_item},
            {"cost_per_item", c.cost_per_item},
            {"n_items", c.n_items},
            {"total_cost", c.total_cost}};
    j["seconds_per_item"] = c.seconds_per_item ? ojson(*c.seconds_per_item) : ojson(nullptr);
    j["total_seconds"] = c.total_seconds ? ojson(*c.total_seconds) : ojson(nullptr);
    return j;
}

std::string metrics_table(const std::vector<EvalReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        const std::string model = r.classifier + (r.model_tag.empty() ? "" : " (" + r.model_tag + ")");
        rows.push_back({r.institution_id, model, text::fixed(r.metrics.accuracy, 2), text::fixed(r.metrics.f1, 2),
                        text::fixed(r.auc, 2), text::fixed(r.optimal_threshold, 3),
                        std::to_string(r.n_pos) + "/" + std::to_string(r.n_neg)});
    }
    return text::format_table({"Institution", "Model", "Accuracy", "F1", "AUC", "Threshold", "Pos/Neg"}, rows,
                              {2, 3, 4, 5, 6});
}

std::string cost_table(const std::vector<CostEstimate>& estimates) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : estimates) {
        std::ostringstream per_item;
        per_item.precision(6);
        per_item << c.cost_per_item;
        rows.push_back({c.model_tag, text::fixed(c.avg_chars, 0), std::to_string(c.input_tokens),
                        std::to_string(c.output_tokens), "$" + per_item.str(), "$" + text::fixed(c.total_cost, 2),
                        c.total_seconds ? text::fixed(*c.total_seconds / 60.0, 1) + " min" : "-"});
    }
    return text::format_table({"Model", "Avg chars", "Input tokens", "Output tokens", "Cost/item", "Total cost",
                               "Total time"},
                              rows, {1, 2, 3, 4, 5, 6});
}

std::string roc_csv(const std::vector<RocPoint>& roc) {
    std::string out = text::csv_row({"fpr", "tpr", "threshold"});
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    for (const auto& p : roc)
        out += text::csv_row({num(p.fpr), num(p.tpr), std::isinf(p.threshold) ? "inf" : num(p.threshold)});
    return out;
}

}  // namespace repofind::eval
