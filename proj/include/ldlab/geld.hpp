#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ldlab/dataset.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/learners.hpp"
#include "ldlab/rng.hpp"

namespace ldlab {

struct GeldConfig {
    int repeats = 5;             // K
    int folds = 6;               // M
    double mu = 1.0;             // variance weight
    double prob_floor = 1e-12;   // clamping epsilon before any log
    bool renormalize = true;     // renormalize the geometric-mean prediction
    bool centered = false;       // subtract H(p_bar) from the variance term
    std::uint64_t seed = 0;
    LearnerSpec learner;

    void validate() const {
        if (repeats < 1) throw InvalidArgument("GeldConfig: K must be >= 1");
        if (folds < 2) throw InvalidArgument("GeldConfig: M must be >= 2");
        if (mu < 0.0) throw InvalidArgument("GeldConfig: mu must be >= 0");
        if (!(prob_floor > 0.0 && prob_floor < 0.5))
            throw InvalidArgument("GeldConfig: prob_floor must be in (0, 0.5)");
    }
};

// K*M clamped probability vectors per training sample, with the fold
// assignment of every repeat.
struct PredictionTensor {
    int repeats = 0;
    int folds = 0;
    int classes = 0;
    std::vector<int> sample_ids;
    // preds[i][k*folds + m][c]
    std::vector<std::vector<std::vector<double>>> preds;
    // fold_of[k][i] = fold index of sample position i in repeat k
    std::vector<std::vector<int>> fold_of;

    int index_of(int sample_id) const {
        for (std::size_t i = 0; i < sample_ids.size(); ++i)
            if (sample_ids[i] == sample_id) return static_cast<int>(i);
        throw InvalidArgument("PredictionTensor: unknown sample id " +
                              std::to_string(sample_id));
    }
};

struct DifficultyRow {
    int id = 0;
    double bias = 0.0;
    double variance = 0.0;
    double err = 0.0;
    int rank = 0;  // 1 = hardest (largest err); ties by smaller id
    double loss = std::numeric_limits<double>::quiet_NaN();      // baseline, optional
    double ave_loss = std::numeric_limits<double>::quiet_NaN();  // baseline, optional
};

struct DifficultyReport {
    std::vector<DifficultyRow> rows;
    double mu = 1.0;

    const DifficultyRow& by_id(int id) const {
        for (const auto& r : rows)
            if (r.id == id) return r;
        throw InvalidArgument("DifficultyReport: unknown sample id " + std::to_string(id));
    }
};

// Component-wise geometric mean of the K*M predictions, computed in log
// space, optionally renormalized to sum 1.
inline std::vector<double> average_prediction(const PredictionTensor& tensor, int sample_id,
                                              bool renormalize = true) {
    const int i = tensor.index_of(sample_id);
    const auto& preds = tensor.preds[i];
    const int c = tensor.classes;
    std::vector<double> logsum(c, 0.0);
    for (const auto& p : preds)
        for (int j = 0; j < c; ++j) logsum[j] += std::log(p[j]);
    std::vector<double> avg(c);
    double total = 0.0;
    for (int j = 0; j < c; ++j) {
        avg[j] = std::exp(logsum[j] / static_cast<double>(preds.size()));
        total += avg[j];
    }
    if (renormalize)
        for (double& v : avg) v /= total;
    return avg;
}

// Cross-entropy of the average prediction against the observed label.
inline double bias_term(const std::vector<double>& avg, int label, double prob_floor = 1e-12) {
    return -std::log(std::max(avg.at(label), prob_floor));
}

// Mean cross-entropy of the individual predictions against the average. Note
// this equals H(avg) rather than 0 when all predictions coincide.
inline double variance_term(const PredictionTensor& tensor, int sample_id,
                            const std::vector<double>& avg, double prob_floor = 1e-12) {
    const int i = tensor.index_of(sample_id);
    const auto& preds = tensor.preds[i];
    double acc = 0.0;
    for (const auto& p : preds) {
        double ce = 0.0;
        for (int c = 0; c < tensor.classes; ++c)
            ce -= avg[c] * std::log(std::max(p[c], prob_floor));
        acc += ce;
    }
    return acc / static_cast<double>(preds.size());
}

inline double geld_score(double bias, double var, double mu) { return bias + mu * var; }

inline double shannon_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

namespace detail {

// Near-equal partition into M folds: sizes differ by at most one.
inline std::vector<int> random_fold_assignment(int n, int folds, Rng& rng) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[i], perm[j]);
    }
    std::vector<int> fold(n);
    const int base = n / folds, extra = n % folds;
    int pos = 0;
    for (int m = 0; m < folds; ++m) {
        const int sz = base + (m < extra ? 1 : 0);
        for (int i = 0; i < sz; ++i) fold[perm[pos++]] = m;
    }
    return fold;
}

inline void rank_by_err(DifficultyReport& report) {
    std::vector<int> order(report.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (report.rows[a].err != report.rows[b].err)
            return report.rows[a].err > report.rows[b].err;
        return report.rows[a].id < report.rows[b].id;
    });
    for (std::size_t r = 0; r < order.size(); ++r)
        report.rows[order[r]].rank = static_cast<int>(r) + 1;
}

}  // namespace detail

// K repeats of M-fold cross-validation: each fold model is trained on the
// complement, selected on the validation set, and predicts probabilities for
// every training sample. Fold partitions are resampled fresh per repeat.
inline std::pair<PredictionTensor, DifficultyReport> run_geld(const Dataset& train,
                                                              const Dataset& validation,
                                                              const GeldConfig& config) {
    config.validate();
    if (!train.is_classification())
        throw InvalidArgument("run_geld: classification dataset required");
    const int n = static_cast<int>(train.size());
    if (n < config.folds) throw InvalidArgument("run_geld: need at least M training samples");

    PredictionTensor tensor;
    tensor.repeats = config.repeats;
    tensor.folds = config.folds;
    tensor.classes = train.class_count;
    for (const Sample& s : train.samples) tensor.sample_ids.push_back(s.id);
    tensor.preds.assign(n, std::vector<std::vector<double>>(
                               static_cast<std::size_t>(config.repeats) * config.folds));
    tensor.fold_of.resize(config.repeats);

    for (int k = 0; k < config.repeats; ++k) {
        Rng rng(derive_seed(config.seed, 0xf01d, static_cast<std::uint64_t>(k)));
        tensor.fold_of[k] = detail::random_fold_assignment(n, config.folds, rng);
        for (int m = 0; m < config.folds; ++m) {
            Dataset subset;
            subset.class_count = train.class_count;
            for (int i = 0; i < n; ++i)
                if (tensor.fold_of[k][i] != m) subset.samples.push_back(train.samples[i]);

            LearnerSpec spec = config.learner;
            spec.seed = derive_seed(config.seed, 0x7f17, static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(m));
            FittedModel model = [&]() {
                try {
                    return fit(spec, subset, validation);
                } catch (const TrainingDiverged& e) {
                    throw TrainingDiverged("run_geld: fold (k=" + std::to_string(k) +
                                               ", m=" + std::to_string(m) + ") diverged",
                                           e.epoch());
                }
            }();

            auto probs = predict_proba(model, train);
            for (int i = 0; i < n; ++i) {
                for (double& p : probs[i]) p = std::clamp(p, config.prob_floor, 1.0);
                tensor.preds[i][static_cast<std::size_t>(k) * config.folds + m] =
                    std::move(probs[i]);
            }
        }
    }

    DifficultyReport report;
    report.mu = config.mu;
    report.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        const int id = train.samples[i].id;
        const auto avg = average_prediction(tensor, id, config.renormalize);
        DifficultyRow& row = report.rows[i];
        row.id = id;
        row.bias = bias_term(avg, train.samples[i].label, config.prob_floor);
        row.variance = variance_term(tensor, id, avg, config.prob_floor);
        if (config.centered) row.variance -= shannon_entropy(avg);
        row.err = geld_score(row.bias, row.variance, config.mu);
    }
    detail::rank_by_err(report);
    return {std::move(tensor), std::move(report)};
}

enum class BaselineMode { final_epoch, average_last_e };

struct BaselineResult {
    std::vector<double> values;  // per sample, train order
    std::string warning;         // non-empty when E was clipped
};

// Single full-data training run. `final_epoch` returns the per-sample
// cross-entropy at the best-validation epoch; `average_last_e` the mean over
// the last E epochs.
inline BaselineResult baseline_loss(const Dataset& train, const Dataset& validation,
                                    const LearnerSpec& spec, BaselineMode mode,
                                    int last_e = 100) {
    if (!train.is_classification())
        throw InvalidArgument("baseline_loss: classification dataset required");
    TrainTrace trace;
    fit(spec, train, validation, &trace);

    BaselineResult result;
    const int n = static_cast<int>(train.size());
    if (mode == BaselineMode::final_epoch) {
        result.values = trace.per_sample_loss[trace.best_epoch - 1];
        return result;
    }
    int e = last_e;
    if (e > spec.epochs) {
        result.warning = "average_last_e: E clipped from " + std::to_string(e) + " to " +
                         std::to_string(spec.epochs);
        e = spec.epochs;
    }
    if (e < 1) e = 1;
    result.values.assign(n, 0.0);
    for (int epoch = spec.epochs - e; epoch < spec.epochs; ++epoch)
        for (int i = 0; i < n; ++i) result.values[i] += trace.per_sample_loss[epoch][i];
    for (double& v : result.values) v /= e;
    return result;
}

}  // namespace ldlab
