#include "repofind/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "repofind/text.hpp"

namespace repofind::svm {

double Calibration::operator()(double f) const {
    const double z = A * f + B;
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sign_of(int label) { return label == 1 ? 1.0 : -1.0; }

void check_training_data(const std::vector<LabeledVector>& data) {
    if (data.empty()) throw TrainingError("training set is empty");
    std::int64_t pos = 0, neg = 0;
    const auto dim = data.front().values.size();
    if (dim == 0) throw TrainingError("training vectors have dimension 0");
    for (const auto& x : data) {
        if (x.label != 0 && x.label != 1) throw TrainingError("label for " + x.repo_id + " must be 0 or 1");
        if (x.values.size() != dim)
            throw TrainingError("dimension mismatch for " + x.repo_id + ": " + std::to_string(x.values.size()) +
                                " vs " + std::to_string(dim));
        for (double v : x.values)
            if (!std::isfinite(v)) throw TrainingError("non-finite feature in " + x.repo_id);
        (x.label == 1 ? pos : neg)++;
    }
    if (pos == 0 || neg == 0)
        throw TrainingError("training needs both classes (positives " + std::to_string(pos) + ", negatives " +
                            std::to_string(neg) + ")");
}

}  // namespace

LinearFit fit_linear(const std::vector<LabeledVector>& data, const Params& params) {
    check_training_data(data);
    if (!(params.C > 0.0)) throw TrainingError("C must be positive");
    const std::size_t n = data.size();
    const std::size_t d = data.front().values.size();

    LinearFit fit;
    fit.weights.assign(d, 0.0);
    fit.alpha.assign(n, 0.0);
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) qii[i] = dot(data[i].values, data[i].values) + 1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(params.seed);
    const double C = params.C;

    for (fit.epochs = 0; fit.epochs < params.max_epochs; ++fit.epochs) {
        std::shuffle(order.begin(), order.end(), rng);
        double worst = 0.0;
        for (auto i : order) {
            const double y = sign_of(data[i].label);
            const double G = y * (dot(fit.weights, data[i].values) + fit.bias) - 1.0;
            double& a = fit.alpha[i];
            double pg = G;
            if (a <= 0.0) pg = std::min(G, 0.0);
            else if (a >= C) pg = std::max(G, 0.0);
            worst = std::max(worst, std::abs(pg));
            if (pg == 0.0) continue;
            const double next = std::clamp(a - G / qii[i], 0.0, C);
            const double delta = (next - a) * y;
            a = next;
            for (std::size_t k = 0; k < d; ++k) fit.weights[k] += delta * data[i].values[k];
            fit.bias += delta;
        }
        if (worst < params.tolerance) break;
    }
    return fit;
}

double objective(const std::vector<double>& w, double b, const std::vector<LabeledVector>& data, double C) {
    double loss = 0.0;
    for (const auto& x : data) loss += std::max(0.0, 1.0 - sign_of(x.label) * (dot(w, x.values) + b));
    return 0.5 * (dot(w, w) + b * b) + C * loss;
}

std::vector<double> subgradient(const std::vector<double>& w, double b, const std::vector<LabeledVector>& data,
                                double C) {
    std::vector<double> g(w);
    g.push_back(b);
    for (const auto& x : data) {
        const double y = sign_of(x.label);
        if (1.0 - y * (dot(w, x.values) + b) <= 0.0) continue;
        for (std::size_t k = 0; k < w.size(); ++k) g[k] -= C * y * x.values[k];
        g.back() -= C * y;
    }
    return g;
}

// ---------------------------------------------------------------------------

namespace {

// Cross-entropy against smoothed targets for P = 1/(1+exp(-(A f + B))).
double sigmoid_loss(const std::vector<double>& f, const std::vector<double>& t, double A, double B) {
    double v = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = -(A * f[i] + B);  // P = 1/(1+exp(z))
        v += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return v;
}

// Damped Newton with backtracking; `fix_a` keeps A constant and moves B only.
void newton(const std::vector<double>& f, const std::vector<double>& t, double& A, double& B, bool fix_a) {
    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;
    double fval = sigmoid_loss(f, t, A, B);
    for (int it = 0; it < kMaxIter; ++it) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double z = A * f[i] + B;
            const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            const double d2 = p * (1.0 - p);
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h21 += f[i] * d2;
            const double d1 = p - t[i];
            g1 += f[i] * d1;
            g2 += d1;
        }
        if (fix_a) g1 = 0.0, h21 = 0.0;
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        double dA = 0.0, dB = 0.0;
        if (fix_a) {
            dB = -g2 / h22;
        } else {
            const double det = h11 * h22 - h21 * h21;
            dA = -(h22 * g1 - h21 * g2) / det;
            dB = -(-h21 * g1 + h11 * g2) / det;
        }
        const double gd = g1 * dA + g2 * dB;
        double step = 1.0;
        for (; step >= kMinStep; step /= 2.0) {
            const double nA = A + step * dA, nB = B + step * dB;
            const double nf = sigmoid_loss(f, t, nA, nB);
            if (nf < fval + 1e-4 * step * gd) {
                A = nA;
                B = nB;
                fval = nf;
                break;
            }
        }
        if (step < kMinStep) break;
    }
}

}  // namespace

Calibration fit_calibration(const std::vector<double>& f, const std::vector<int>& labels) {
    if (f.size() != labels.size() || f.empty()) throw TrainingError("calibration needs one label per decision value");
    double n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
    const double hi = (n_pos + 1.0) / (n_pos + 2.0);
    const double lo = 1.0 / (n_neg + 2.0);
    std::vector<double> t(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) t[i] = labels[i] == 1 ? hi : lo;

    Calibration c{0.0, std::log((n_pos + 1.0) / (n_neg + 1.0))};
    newton(f, t, c.A, c.B, false);
    if (!(c.A > 0.0) || !std::isfinite(c.A) || !std::isfinite(c.B)) {
        c.A = 1e-6;
        c.B = std::log((n_pos + 1.0) / (n_neg + 1.0));
        newton(f, t, c.A, c.B, true);
    }
    return c;
}

namespace {

std::string hash_data(const std::vector<LabeledVector>& data) {
    std::string buf;
    char num[32];
    for (const auto& x : data) {
        buf += x.repo_id;
        buf += '\t';
        buf += std::to_string(x.label);
        for (double v : x.values) {
            std::snprintf(num, sizeof num, "\t%.17g", v);
            buf += num;
        }
        buf += '\n';
    }
    return text::sha256_hex(buf);
}

}  // namespace

Model train(const std::vector<LabeledVector>& input, const Params& params, const std::string& model_tag) {
    check_training_data(input);
    // Canonical order: the result does not depend on how the caller ordered the data.
    std::vector<LabeledVector> data(input);
    std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) {
        return std::tie(a.repo_id, a.label, a.values) < std::tie(b.repo_id, b.label, b.values);
    });

    Model m;
    m.model_tag = model_tag;
    const auto fit = fit_linear(data, params);
    m.weights = fit.weights;
    m.bias = fit.bias;

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i) (data[i].label == 1 ? pos : neg).push_back(i);
    const int k = std::min<int>({params.folds, static_cast<int>(pos.size()), static_cast<int>(neg.size())});

    std::vector<double> f(data.size());
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
    if (k >= 2) {
        std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);
        std::vector<int> fold(data.size());
        for (std::size_t j = 0; j < pos.size(); ++j) fold[pos[j]] = static_cast<int>(j % k);
        for (std::size_t j = 0; j < neg.size(); ++j) fold[neg[j]] = static_cast<int>(j % k);
        for (int held = 0; held < k; ++held) {
            std::vector<LabeledVector> train_part;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (fold[i] != held) train_part.push_back(data[i]);
            const auto part = fit_linear(train_part, params);
            for (std::size_t i = 0; i < data.size(); ++i)
                if (fold[i] == held) f[i] = dot(part.weights, data[i].values) + part.bias;
        }
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) f[i] = dot(m.weights, data[i].values) + m.bias;
    }
    m.calibration = fit_calibration(f, labels);

    m.manifest.n_pos = static_cast<std::int64_t>(pos.size());
    m.manifest.n_neg = static_cast<std::int64_t>(neg.size());
    m.manifest.C = params.C;
    m.manifest.seed = params.seed;
    m.manifest.folds = k >= 2 ? k : 0;
    m.manifest.data_hash = hash_data(data);
    for (const auto& x : data) m.manifest.training_repo_ids.push_back(x.repo_id);
    return m;
}

double decision_value(const Model& model, const std::vector<double>& values) {
    if (values.size() != model.dim())
        throw InputError("vector dimension " + std::to_string(values.size()) + " does not match model dimension " +
                         std::to_string(model.dim()));
    return dot(model.weights, values) + model.bias;
}

double predict_probability(const Model& model, const std::vector<double>& values) {
    return model.calibration(decision_value(model, values));
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const Model& m) {
    return nlohmann::ordered_json{
        {"format", Model::kFormat},
        {"version", Model::kVersion},
        {"model_tag", m.model_tag},
        {"dim", m.dim()},
        {"weights", m.weights},
        {"bias", m.bias},
        {"calibration", {{"A", m.calibration.A}, {"B", m.calibration.B}}},
        {"manifest",
         {{"n_pos", m.manifest.n_pos},
          {"n_neg", m.manifest.n_neg},
          {"C", m.manifest.C},
          {"seed", m.manifest.seed},
          {"folds", m.manifest.folds},
          {"data_hash", m.manifest.data_hash},
          {"training_repo_ids", m.manifest.training_repo_ids}}}};
}

Model model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != Model::kFormat) throw DataError("not an SVM model document");
        const int version = j.at("version").get<int>();
        if (version > Model::kVersion)
            throw DataError("model version " + std::to_string(version) + " is newer than supported version " +
                            std::to_string(Model::kVersion));
        Model m;
        m.model_tag = j.at("model_tag").get<std::string>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.calibration = {j.at("calibration").at("A").get<double>(), j.at("calibration").at("B").get<double>()};
        const auto& mf = j.at("manifest");
        m.manifest.n_pos = mf.at("n_pos").get<std::int64_t>();
        m.manifest.n_neg = mf.at("n_neg").get<std::int64_t>();
        m.manifest.C = mf.at("C").get<double>();
        m.manifest.seed = mf.at("seed").get<std::uint64_t>();
        m.manifest.folds = mf.value("folds", 0);
        m.manifest.data_hash = mf.at("data_hash").get<std::string>();
        m.manifest.training_repo_ids = mf.at("training_repo_ids").get<std::vector<std::string>>();
        if (j.at("dim").get<std::size_t>() != m.weights.size())
            throw DataError("model dim does not match its weight vector");
        if (!(m.calibration.A > 0.0)) throw DataError("model calibration slope must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out << to_json(model).dump(2) << '\n';
    if (!out) throw IoError("write to model file '" + path + "' failed");
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("model file '" + path + "' not found");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "' is not JSON: " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace repofind::svm
