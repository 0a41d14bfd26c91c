#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldlab/dataset.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/rng.hpp"

namespace ldlab {

inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int k = -7; k <= 1; ++k) grid.push_back(std::exp(static_cast<double>(k)));
    return grid;
}

struct RidgeConfig {
    int degree = 10;
    std::vector<double> lambda_grid = default_lambda_grid();
    int ensemble_size = 40;
    int train_size = 200;
};

// Degree-d polynomial with an unpenalized intercept. weights[i-1] is the
// coefficient of x^i in the raw monomial basis.
struct PolynomialModel {
    std::vector<double> weights;
    double intercept = 0.0;

    double predict(double x) const {
        double acc = intercept;
        double p = 1.0;
        for (double w : weights) {
            p *= x;
            acc += w * p;
        }
        return acc;
    }
};

// Closed-form ridge on the raw monomial expansion [x, x^2, ..., x^d]: the
// penalty applies to the monomial coefficients themselves, so the MDL
// complexity formula reads off the penalized quantities directly. Solved as
// an augmented least-squares problem via SVD, which stays accurate where the
// normal equations (x^T x + lambda I) would lose all precision at degree 10.
// The intercept is unpenalized (columns and targets are centered first).
inline PolynomialModel fit_ridge(const Dataset& train, double lambda, int degree) {
    if (train.samples.empty()) throw InvalidArgument("fit_ridge: empty training set");
    if (train.is_classification()) throw InvalidArgument("fit_ridge: regression dataset required");
    if (lambda <= 0.0) throw InvalidArgument("fit_ridge: lambda must be positive");
    if (degree < 1) throw InvalidArgument("fit_ridge: degree must be >= 1");

    const int n = static_cast<int>(train.size());
    Eigen::MatrixXd x(n, degree);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double xi = train.samples[i].features.at(0);
        double p = 1.0;
        for (int j = 0; j < degree; ++j) {
            p *= xi;
            if (!std::isfinite(p))
                throw InvalidArgument("fit_ridge: degree causes overflow in x^d");
            x(i, j) = p;
        }
        y[i] = train.samples[i].target;
    }

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double ymean = y.mean();

    Eigen::MatrixXd aug(n + degree, degree);
    aug.topRows(n) = x.rowwise() - mean;
    aug.bottomRows(degree) =
        std::sqrt(lambda) * Eigen::MatrixXd::Identity(degree, degree);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + degree);
    rhs.head(n) = y.array() - ymean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd w = svd.solve(rhs);

    PolynomialModel m;
    m.weights.assign(w.data(), w.data() + degree);
    m.intercept = ymean - mean.dot(w);
    for (double v : m.weights)
        if (!std::isfinite(v)) throw std::runtime_error("fit_ridge: non-finite solution");
    return m;
}

// MDL-based complexity: sum over i of ((i/d) * w_i)^2, intercept excluded.
inline double model_complexity(const PolynomialModel& m) {
    const int d = static_cast<int>(m.weights.size());
    double acc = 0.0;
    for (int i = 1; i <= d; ++i) {
        const double term = static_cast<double>(i) / d * m.weights[i - 1];
        acc += term * term;
    }
    return acc;
}

// Ensemble statistics per lambda value, plus per-(lambda, sample) bias,
// variance and error against the clean targets of the eval set.
struct LambdaSweep {
    std::vector<double> lambdas;
    std::vector<double> complexity;     // c(lambda), ensemble mean
    std::vector<double> mean_bias;
    std::vector<double> mean_variance;
    std::vector<double> mean_error;
    // Indexed [lambda][eval sample].
    std::vector<std::vector<double>> bias;
    std::vector<std::vector<double>> variance;
    std::vector<std::vector<double>> error;
    std::vector<int> eval_ids;
    std::vector<double> eval_x;

    std::size_t eval_count() const { return eval_ids.size(); }
    int index_of(int sample_id) const {
        for (std::size_t i = 0; i < eval_ids.size(); ++i)
            if (eval_ids[i] == sample_id) return static_cast<int>(i);
        throw InvalidArgument("LambdaSweep: unknown sample id " + std::to_string(sample_id));
    }
};

namespace detail {

// Resamples `train_size` pool indices preserving the pool's region
// proportions (largest remainder over the three x-regions), without
// replacement within each region.
inline std::vector<int> stratified_resample(const Dataset& pool, int train_size, Rng& rng) {
    std::array<std::vector<int>, 3> by_region;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i)
        by_region[region_of(pool.samples[i].features[0])].push_back(i);

    const int n = static_cast<int>(pool.size());
    std::array<int, 3> counts = {0, 0, 0};
    std::array<double, 3> exact{};
    int assigned = 0;
    for (int r = 0; r < 3; ++r) {
        exact[r] = static_cast<double>(train_size) * by_region[r].size() / n;
        counts[r] = static_cast<int>(std::floor(exact[r]));
        assigned += counts[r];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
    });
    for (int i = 0; assigned < train_size; ++i, ++assigned) ++counts[order[i % 3]];

    std::vector<int> picked;
    picked.reserve(train_size);
    for (int r = 0; r < 3; ++r) {
        if (counts[r] > static_cast<int>(by_region[r].size()))
            throw InvalidArgument("run_sweep: region too small for requested train size");
        auto sel = choose_distinct(static_cast<int>(by_region[r].size()), counts[r], rng);
        for (int s : sel) picked.push_back(by_region[r][s]);
    }
    return picked;
}

}  // namespace detail

// Trains ensemble_size ridge models per lambda on resampled training sets
// (noisy targets) and evaluates bias/variance/error per eval sample against
// the clean targets. The same ensemble_size training subsets are reused
// across the whole lambda grid, so bias/variance curves vary only through
// the penalty and not through resampling noise. Member seeds derive from
// (seed, member index) so results do not depend on execution order.
inline LambdaSweep run_sweep(const RidgeConfig& config, const Dataset& pool,
                             const Dataset& eval_set, std::uint64_t seed) {
    if (config.lambda_grid.empty()) throw InvalidArgument("run_sweep: empty lambda grid");
    if (!std::is_sorted(config.lambda_grid.begin(), config.lambda_grid.end(),
                        std::less_equal<double>()))
        throw InvalidArgument("run_sweep: lambda grid must be strictly increasing");
    if (config.ensemble_size < 2) throw InvalidArgument("run_sweep: ensemble_size must be >= 2");
    if (pool.is_classification() || eval_set.is_classification())
        throw InvalidArgument("run_sweep: regression datasets required");

    const int n_lambda = static_cast<int>(config.lambda_grid.size());
    const int n_eval = static_cast<int>(eval_set.size());
    const int t_count = config.ensemble_size;

    LambdaSweep sweep;
    sweep.lambdas = config.lambda_grid;
    sweep.complexity.resize(n_lambda);
    sweep.mean_bias.resize(n_lambda);
    sweep.mean_variance.resize(n_lambda);
    sweep.mean_error.resize(n_lambda);
    sweep.bias.assign(n_lambda, std::vector<double>(n_eval));
    sweep.variance.assign(n_lambda, std::vector<double>(n_eval));
    sweep.error.assign(n_lambda, std::vector<double>(n_eval));
    for (const Sample& s : eval_set.samples) {
        sweep.eval_ids.push_back(s.id);
        sweep.eval_x.push_back(s.features[0]);
    }

    std::vector<Dataset> subsets(t_count);
    for (int t = 0; t < t_count; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const auto idx = detail::stratified_resample(pool, config.train_size, rng);
        subsets[t].class_count = 0;
        subsets[t].samples.reserve(idx.size());
        for (int i : idx) subsets[t].samples.push_back(pool.samples[i]);
    }

    std::vector<std::vector<double>> preds(t_count, std::vector<double>(n_eval));
    for (int li = 0; li < n_lambda; ++li) {
        const double lambda = config.lambda_grid[li];
        double c_sum = 0.0;
        for (int t = 0; t < t_count; ++t) {
            const PolynomialModel model = fit_ridge(subsets[t], lambda, config.degree);
            c_sum += model_complexity(model);
            for (int j = 0; j < n_eval; ++j)
                preds[t][j] = model.predict(eval_set.samples[j].features[0]);
        }
        sweep.complexity[li] = c_sum / t_count;

        double b_sum = 0.0, v_sum = 0.0;
        for (int j = 0; j < n_eval; ++j) {
            double fbar = 0.0;
            for (int t = 0; t < t_count; ++t) fbar += preds[t][j];
            fbar /= t_count;
            const double dy = eval_set.samples[j].clean_target - fbar;
            const double b = dy * dy;
            double v = 0.0;
            for (int t = 0; t < t_count; ++t) {
                const double dv = fbar - preds[t][j];
                v += dv * dv;
            }
            v /= t_count;
            sweep.bias[li][j] = b;
            sweep.variance[li][j] = v;
            sweep.error[li][j] = b + v;
            b_sum += b;
            v_sum += v;
        }
        sweep.mean_bias[li] = b_sum / n_eval;
        sweep.mean_variance[li] = v_sum / n_eval;
        sweep.mean_error[li] = sweep.mean_bias[li] + sweep.mean_variance[li];
    }
    return sweep;
}

struct Optimum {
    double lambda_star = 0.0;
    double c_star = 0.0;
    double err_star = 0.0;
    int grid_index = -1;
};

namespace detail {

// Grid argmin with ties broken toward the smaller complexity.
inline Optimum grid_argmin(const LambdaSweep& sweep, const std::vector<double>& errs) {
    Optimum best;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        const bool better = best.grid_index < 0 || errs[i] < best.err_star ||
                            (errs[i] == best.err_star && sweep.complexity[i] < best.c_star);
        if (better) {
            best.grid_index = static_cast<int>(i);
            best.lambda_star = sweep.lambdas[i];
            best.c_star = sweep.complexity[i];
            best.err_star = errs[i];
        }
    }
    return best;
}

}  // namespace detail

// Whole-set optimum.
inline Optimum optimal_complexity(const LambdaSweep& sweep) {
    return detail::grid_argmin(sweep, sweep.mean_error);
}

// Single-sample optimum: the sample's theoretical learning difficulty is the
// complexity at this argmin.
inline Optimum optimal_complexity(const LambdaSweep& sweep, int sample_id) {
    const int j = sweep.index_of(sample_id);
    std::vector<double> errs(sweep.lambdas.size());
    for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) errs[li] = sweep.error[li][j];
    return detail::grid_argmin(sweep, errs);
}

// Region optimum over eval samples with x in [lo, hi).
inline Optimum optimal_complexity(const LambdaSweep& sweep, double lo, double hi) {
    std::vector<int> members;
    for (std::size_t j = 0; j < sweep.eval_count(); ++j)
        if (sweep.eval_x[j] >= lo && sweep.eval_x[j] < hi) members.push_back(static_cast<int>(j));
    if (members.empty()) throw InvalidArgument("optimal_complexity: empty region");
    std::vector<double> errs(sweep.lambdas.size(), 0.0);
    for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
        for (int j : members) errs[li] += sweep.error[li][j];
        errs[li] /= members.size();
    }
    return detail::grid_argmin(sweep, errs);
}

enum class Partition { easy, medium, hard, quite_hard };

inline std::string partition_name(Partition p) {
    switch (p) {
        case Partition::easy: return "easy";
        case Partition::medium: return "medium";
        case Partition::hard: return "hard";
        case Partition::quite_hard: return "quite_hard";
    }
    return "?";
}

struct DifficultyThresholds {
    double tau = 1.0;     // dichotomy split
    double tau_e = 0.8;   // trichotomy: easy upper bound
    double tau_h = 1.25;  // trichotomy: medium upper bound
    double tau_q = 0.0;   // optional quite-hard bound (> tau_h); 0 disables
};

struct DifficultyVerdict {
    double ld = 0.0;   // c*_x
    double ldc = 0.0;  // c*_x / c*
    Partition partition = Partition::easy;
    DifficultyThresholds thresholds;
};

enum class PartitionMode { dichotomy, trichotomy };

inline DifficultyVerdict difficulty_verdict(const LambdaSweep& sweep, int sample_id,
                                            const DifficultyThresholds& th,
                                            PartitionMode mode = PartitionMode::trichotomy) {
    if (!(th.tau_e > 0.0 && th.tau_e < 1.0 && th.tau_h > 1.0))
        throw InvalidArgument("difficulty_verdict: need 0 < tau_e < 1 < tau_h");
    if (th.tau_q != 0.0 && th.tau_q <= th.tau_h)
        throw InvalidArgument("difficulty_verdict: tau_q must exceed tau_h");

    const Optimum whole = optimal_complexity(sweep);
    const Optimum own = optimal_complexity(sweep, sample_id);
    DifficultyVerdict v;
    v.ld = own.c_star;
    v.ldc = own.c_star / whole.c_star;
    v.thresholds = th;
    if (mode == PartitionMode::dichotomy) {
        v.partition = v.ldc <= th.tau ? Partition::easy : Partition::hard;
    } else if (v.ldc <= th.tau_e) {
        v.partition = Partition::easy;
    } else if (v.ldc <= th.tau_h) {
        v.partition = Partition::medium;
    } else if (th.tau_q != 0.0 && v.ldc > th.tau_q) {
        v.partition = Partition::quite_hard;
    } else {
        v.partition = Partition::hard;
    }
    return v;
}

}  // namespace ldlab
