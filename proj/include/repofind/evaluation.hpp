#pragma once

// Sampling protocol, ROC/AUC, Youden-optimal thresholds, threshold metrics
// and the token cost estimator.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"

namespace repofind::eval {

struct ScoredEntry {
    std::string repo_id;
    double probability = 0.0;
    int label = 0;

    friend bool operator==(const ScoredEntry&, const ScoredEntry&) = default;
};
using ScoredSet = std::vector<ScoredEntry>;

/// Throws InputError for probabilities outside [0,1] or non-binary labels.
void validate(const ScoredSet& set);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the leading (0,0) point

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct Confusion {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ThresholdMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;

    friend bool operator==(const ThresholdMetrics&, const ThresholdMetrics&) = default;
};

struct EvalReport {
    std::string institution_id;
    std::string classifier;
    std::string model_tag;
    std::uint64_t seed = 0;
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    std::vector<RocPoint> roc;
    double auc = 0.0;
    double optimal_threshold = 0.0;
    double youden_j = 0.0;
    ThresholdMetrics metrics;  // at optimal_threshold

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// One point per distinct score, descending, plus the leading (0,0) point.
/// Equal scores form one step. Throws MetricError unless both classes occur.
std::vector<RocPoint> roc_curve(const ScoredSet& set);
double trapezoid_auc(const std::vector<RocPoint>& roc);

/// Fills roc, auc, n_pos and n_neg.
EvalReport roc_auc(const ScoredSet& set);

/// Distinct score maximizing J = TPR - FPR under the rule `p >= t`; ties go to
/// the higher TPR, then the lower threshold. Returns (threshold, J).
std::pair<double, double> optimal_threshold(const ScoredSet& set);

/// Positive prediction iff probability >= threshold. F1 is 0 when precision + recall is 0.
ThresholdMetrics threshold_metrics(const ScoredSet& set, double threshold);

/// roc_auc + optimal_threshold + threshold_metrics.
EvalReport evaluate(const ScoredSet& set);

// -- sampling -----------------------------------------------------------------

/// One label per (repo, institution): the most recent, ties broken by labeler.
std::vector<LabelRecord> consolidate_labels(const std::vector<LabelRecord>& labels);

/// Uniform sample of n repos without replacement, no class balancing. The pool
/// is ordered by repo_id first so the result depends only on (pool, n, seed).
/// Throws SamplingError with both counts when the pool is smaller than n.
std::vector<LabelRecord> sample_training_set(const std::vector<LabelRecord>& pool, const std::string& institution_id,
                                             std::size_t n, std::uint64_t seed);

/// Exactly n_per_class positives and negatives, drawn after removing `exclude`.
/// Throws SamplingError reporting per-class counts when either class is short.
std::vector<LabelRecord> build_balanced_test_set(const std::vector<LabelRecord>& pool,
                                                 const std::string& institution_id, std::size_t n_per_class,
                                                 std::uint64_t seed, const std::vector<std::string>& exclude = {});

// -- cost -------------------------------------------------------------------

struct Prices {
    double input_per_1k = 0.0;
    double output_per_1k = 0.0;
};

struct CostEstimate {
    std::string model_tag;
    double avg_chars = 0.0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    Prices prices;
    double input_cost_per_item = 0.0;
    double output_cost_per_item = 0.0;
    double cost_per_item = 0.0;
    std::int64_t n_items = 0;
    double total_cost = 0.0;
    std::optional<double> seconds_per_item;
    std::optional<double> total_seconds;
};

/// Four characters per token, rounded up.
std::int64_t estimate_tokens(double chars);

/// Input price must be positive; output price may be 0 for input-only services.
CostEstimate estimate_cost(const std::string& model_tag, double avg_chars, std::int64_t output_tokens,
                           const Prices& prices, std::int64_t n_items,
                           std::optional<double> seconds_per_item = std::nullopt);

// -- export -----------------------------------------------------------------

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const CostEstimate& estimate);

/// Plain-text tables: model, accuracy, F1, AUC, threshold / model, chars,
/// tokens, cost per item, total cost, time.
std::string metrics_table(const std::vector<EvalReport>& reports);
std::string cost_table(const std::vector<CostEstimate>& estimates);

/// "fpr,tpr,threshold" rows; the leading point's threshold is written as "inf".
std::string roc_csv(const std::vector<RocPoint>& roc);

}  // namespace repofind::eval
