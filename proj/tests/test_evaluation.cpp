#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "oracles.hpp"
#include "repofind/evaluation.hpp"

using namespace repofind;
using namespace repofind::oracle;
using namespace repofind::eval;

namespace {
std::vector<LabelRecord> pool(int pos, int neg, const std::string& inst = "ucsc") {
    std::vector<LabelRecord> out;
    for (int i = 0; i < pos + neg; ++i)
        out.push_back({"o/r" + std::to_string(i), inst, i < pos ? 1 : 0, "ann", "2025-01-01T00:00:00Z"});
    return out;
}

}  // namespace

TEST(Evaluation, AucAndYoudenMatchOraclesOnRandomSets) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto set = random_set(rng);
        const auto report = roc_auc(set);
        ASSERT_NEAR(report.auc, pair_count_auc(set), 1e-9) << "trial " << trial;
        const auto [t, j] = optimal_threshold(set);
        const auto [want_t, want_j] = exhaustive_youden(set);
        ASSERT_EQ(t, want_t) << "trial " << trial;
        ASSERT_NEAR(j, want_j, 1e-12) << "trial " << trial;
    }
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(30));
}

TEST(Evaluation, RocShape) {
    const ScoredSet set{{"a", 0.9, 1}, {"b", 0.9, 0}, {"c", 0.4, 1}, {"d", 0.1, 0}};
    const auto roc = roc_curve(set);
    ASSERT_EQ(roc.size(), 4u);
    EXPECT_EQ(roc[0].fpr, 0.0);
    EXPECT_EQ(roc[0].tpr, 0.0);
    EXPECT_TRUE(std::isinf(roc[0].threshold));
    EXPECT_EQ(roc[1], (RocPoint{0.5, 0.5, 0.9}));
    EXPECT_EQ(roc.back().fpr, 1.0);
    EXPECT_EQ(roc.back().tpr, 1.0);
    EXPECT_DOUBLE_EQ(trapezoid_auc(roc), 0.625);
    EXPECT_EQ(roc_csv(roc).substr(0, 26), "fpr,tpr,threshold\r\n0,0,inf");
}

TEST(Evaluation, PerfectAndInvertedScores) {
    const ScoredSet good{{"a", 0.9, 1}, {"b", 0.8, 1}, {"c", 0.2, 0}, {"d", 0.1, 0}};
    EXPECT_EQ(roc_auc(good).auc, 1.0);
    const auto r = evaluate(good);
    EXPECT_EQ(r.optimal_threshold, 0.8);
    EXPECT_EQ(r.youden_j, 1.0);
    EXPECT_EQ(r.metrics.accuracy, 1.0);
    EXPECT_EQ(r.metrics.f1, 1.0);
    ScoredSet bad = good;
    for (auto& e : bad) e.label = 1 - e.label;
    EXPECT_EQ(roc_auc(bad).auc, 0.0);
}

TEST(Evaluation, ErrorsOnDegenerateInput) {
    EXPECT_THROW(roc_curve({{"a", 0.5, 1}}), MetricError);
    EXPECT_THROW(optimal_threshold({{"a", 0.5, 0}, {"b", 0.1, 0}}), MetricError);
    EXPECT_THROW(eval::validate(ScoredSet{{"a", 1.5, 1}}), InputError);
    EXPECT_THROW(eval::validate(ScoredSet{{"a", 0.5, 2}}), InputError);
}

TEST(Evaluation, ThresholdMetricsByHand) {
    const ScoredSet set{{"a", 0.9, 1}, {"b", 0.7, 0}, {"c", 0.6, 1}, {"d", 0.2, 1}, {"e", 0.1, 0}};
    const auto m = threshold_metrics(set, 0.6);
    EXPECT_EQ(m.confusion, (Confusion{2, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(m.accuracy, 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
    EXPECT_EQ(threshold_metrics(set, 0.95).f1, 0.0);
}

TEST(Evaluation, ReportJsonRoundTrip) {
    auto r = evaluate({{"a", 0.9, 1}, {"b", 0.3, 0}, {"c", 0.5, 1}, {"d", 0.5, 0}});
    r.institution_id = "ucsc";
    r.classifier = "svm";
    r.seed = 42;
    EXPECT_EQ(eval_report_from_json(nlohmann::json::parse(to_json(r).dump())), r);
}

TEST(Evaluation, ConsolidateKeepsLatest) {
    const std::vector<LabelRecord> labels{
        {"o/a", "ucsc", 1, "ann", "2025-01-01T00:00:00Z"},
        {"o/a", "ucsc", 0, "bob", "2025-02-01T00:00:00Z"},
        {"o/a", "ucsd", 1, "ann", "2025-01-01T00:00:00Z"},
    };
    const auto c = consolidate_labels(labels);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].label, 0);
    EXPECT_EQ(c[0].labeler, "bob");
}

TEST(Evaluation, TrainingSampleIsDeterministicAndOrderIndependent) {
    auto p = pool(30, 70);
    const auto a = sample_training_set(p, "ucsc", 40, 7);
    std::reverse(p.begin(), p.end());
    EXPECT_EQ(sample_training_set(p, "ucsc", 40, 7), a);
    EXPECT_EQ(a.size(), 40u);
    std::set<std::string> ids;
    for (const auto& l : a) ids.insert(l.repo_id);
    EXPECT_EQ(ids.size(), 40u);
    EXPECT_NE(sample_training_set(p, "ucsc", 40, 8), a);
    try {
        sample_training_set(p, "ucsc", 101, 7);
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("101"), std::string::npos);
    }
    EXPECT_TRUE(sample_training_set(p, "ucsd", 0, 7).empty());
}

TEST(Evaluation, BalancedTestSetExcludesTraining) {
    const auto p = pool(60, 60);
    std::vector<std::string> exclude;
    for (int i = 0; i < 20; ++i) exclude.push_back("o/r" + std::to_string(i));
    const auto t = build_balanced_test_set(p, "ucsc", 40, 3, exclude);
    int pos = 0;
    for (const auto& l : t) {
        pos += l.label;
        EXPECT_EQ(std::find(exclude.begin(), exclude.end(), l.repo_id), exclude.end());
    }
    EXPECT_EQ(t.size(), 80u);
    EXPECT_EQ(pos, 40);
    EXPECT_EQ(build_balanced_test_set(p, "ucsc", 40, 3, exclude), t);
    try {
        build_balanced_test_set(p, "ucsc", 41, 3, exclude);
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("40"), std::string::npos);
    }
}

TEST(Evaluation, TokenEstimate) {
    EXPECT_EQ(estimate_tokens(2900), 725);
    EXPECT_EQ(estimate_tokens(4500), 1125);
    EXPECT_EQ(estimate_tokens(1), 1);
    EXPECT_EQ(estimate_tokens(0), 0);
}

TEST(Evaluation, CostRowsForFiftyTwoThousandRepos) {
    const auto svm = estimate_cost("svm", 2900, 0, {0.00002, 0.0}, 52000);
    EXPECT_EQ(svm.input_tokens, 725);
    EXPECT_NEAR(svm.input_cost_per_item, 0.0000145, 1e-12);
    EXPECT_NEAR(svm.total_cost, 0.754, 0.754 * 0.02);

    const auto gpt35 = estimate_cost("gpt-3.5", 4500, 100, {0.0005, 0.0015}, 52000);
    EXPECT_EQ(gpt35.input_tokens, 1125);
    EXPECT_NEAR(gpt35.input_cost_per_item, 0.00056, 0.000005);
    EXPECT_NEAR(gpt35.output_cost_per_item, 0.00015, 1e-12);
    EXPECT_NEAR(gpt35.total_cost, 36.92, 36.92 * 0.02);

    const auto gpt4o = estimate_cost("gpt-4o", 4500, 100, {0.005, 0.02}, 52000);
    EXPECT_NEAR(gpt4o.input_cost_per_item, 0.00563, 0.000005);
    EXPECT_NEAR(gpt4o.output_cost_per_item, 0.002, 1e-12);
    EXPECT_NEAR(gpt4o.total_cost, 396.76, 396.76 * 0.01);

    const auto timed = estimate_cost("m", 100, 0, {0.001, 0.0}, 10, 0.5);
    EXPECT_EQ(timed.total_seconds, 5.0);
    EXPECT_THROW(estimate_cost("m", 100, 0, {0.0, 0.0}, 10), InputError);
    EXPECT_NE(cost_table({svm, gpt35, gpt4o}).find("gpt-4o"), std::string::npos);
}
