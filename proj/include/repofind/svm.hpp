#pragma once

// Linear soft-margin SVM with sigmoid probability calibration.
//
// Training minimizes 0.5*(|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b))
// with y in {-1, +1}; the bias is treated as the weight of a constant 1
// feature. The dual is solved by coordinate descent with a seeded visiting
// order, so a fixed seed gives bit-identical weights.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"

namespace repofind::svm {

struct LabeledVector {
    std::string repo_id;
    std::vector<double> values;
    int label = 0;  // 0 or 1
};

struct Params {
    double C = 1.0;
    std::uint64_t seed = 42;
    int max_epochs = 10'000;
    double tolerance = 1e-8;  // stop when the projected-gradient spread falls below this
    int folds = 5;            // calibration folds (reduced when a class is smaller)
};

/// p = 1 / (1 + exp(-(A f + B))) with A > 0.
struct Calibration {
    double A = 1.0;
    double B = 0.0;

    double operator()(double decision_value) const;
    friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct Manifest {
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    double C = 1.0;
    std::uint64_t seed = 0;
    int folds = 0;
    std::string data_hash;
    std::vector<std::string> training_repo_ids;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct Model {
    static constexpr const char* kFormat = "repofind-svm";
    static constexpr int kVersion = 1;

    std::string model_tag;  // embedding model the weights belong to
    std::vector<double> weights;
    double bias = 0.0;
    Calibration calibration;
    Manifest manifest;

    std::size_t dim() const { return weights.size(); }
    friend bool operator==(const Model&, const Model&) = default;
};

struct LinearFit {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> alpha;  // dual variables in [0, C]
    int epochs = 0;
};

/// Throws TrainingError unless both classes are present and dimensions agree.
LinearFit fit_linear(const std::vector<LabeledVector>& data, const Params& params);

/// Primal objective and its (sub)gradient with respect to (w, b); the last
/// gradient entry is d/db. At a margin of exactly 1 the hinge term contributes 0.
double objective(const std::vector<double>& w, double b, const std::vector<LabeledVector>& data, double C);
std::vector<double> subgradient(const std::vector<double>& w, double b, const std::vector<LabeledVector>& data,
                                double C);

/// Newton fit of the sigmoid on decision values with smoothed targets.
/// A non-positive slope is pinned to 1e-6 and B refit, keeping the map increasing.
Calibration fit_calibration(const std::vector<double>& decision_values, const std::vector<int>& labels);

/// Fits the SVM on all data and the calibration on out-of-fold decision values
/// from stratified folds.
Model train(const std::vector<LabeledVector>& data, const Params& params, const std::string& model_tag);

/// Throws InputError when the vector's dimension differs from the model's.
double decision_value(const Model& model, const std::vector<double>& values);
double predict_probability(const Model& model, const std::vector<double>& values);

nlohmann::ordered_json to_json(const Model& model);
/// Throws DataError for an unknown format, newer version or inconsistent dims.
Model model_from_json(const nlohmann::json& doc);
void save_model(const Model& model, const std::string& path);
/// Throws IoError when the file is missing or unreadable.
Model load_model(const std::string& path);

}  // namespace repofind::svm
