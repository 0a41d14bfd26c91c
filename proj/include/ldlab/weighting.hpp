#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ldlab/errors.hpp"
#include "ldlab/regression_lab.hpp"

namespace ldlab {

enum class WeightKind {
    constant,
    region_constant,
    spl_threshold,
    power_difficulty,
    adaboost_update,
    soft_margin_update,
};

inline std::string weight_kind_name(WeightKind k) {
    switch (k) {
        case WeightKind::constant: return "constant";
        case WeightKind::region_constant: return "region_constant";
        case WeightKind::spl_threshold: return "spl_threshold";
        case WeightKind::power_difficulty: return "power_difficulty";
        case WeightKind::adaboost_update: return "adaboost_update";
        case WeightKind::soft_margin_update: return "soft_margin_update";
    }
    return "?";
}

struct WeightScheme {
    WeightKind kind = WeightKind::constant;
    double omega = 1.0;       // constant / region_constant weight
    double region_lo = 0.0;   // region_constant: x interval [lo, hi)
    double region_hi = 0.0;
    double spl_lambda = 0.0;  // spl_threshold admission bound on LD
    double gamma = 1.0;       // power_difficulty exponent
    double alpha = 0.5;       // adaboost / soft-margin step weight
    double soft_c = 0.1;      // soft-margin penalty C
};

// Per-sample LD values for the eval set of a sweep, in eval order.
inline std::vector<double> per_sample_ld(const LambdaSweep& sweep) {
    std::vector<double> ld(sweep.eval_count());
    for (std::size_t j = 0; j < sweep.eval_count(); ++j)
        ld[j] = optimal_complexity(sweep, sweep.eval_ids[j]).c_star;
    return ld;
}

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void normalize_mean_one(std::vector<double>& w) {
    double sum = 0.0;
    for (double x : w) sum += x;
    const double mean = sum / w.size();
    for (double& x : w) x /= mean;
}

}  // namespace detail

// Builds the per-eval-sample weight vector for a scheme. `difficulty` is a
// per-sample difficulty score in eval order (normally LD from the sweep).
inline std::vector<double> weights_for(const WeightScheme& scheme, const LambdaSweep& sweep,
                                       const std::vector<double>& difficulty) {
    const std::size_t n = sweep.eval_count();
    if (difficulty.size() != n)
        throw InvalidArgument("weights_for: difficulty must cover every eval sample");
    std::vector<double> w(n, 1.0);
    switch (scheme.kind) {
        case WeightKind::constant: {
            if (scheme.omega <= 0.0) throw InvalidArgument("weights_for: constant omega must be > 0");
            std::fill(w.begin(), w.end(), scheme.omega);
            break;
        }
        case WeightKind::region_constant: {
            for (std::size_t j = 0; j < n; ++j)
                if (sweep.eval_x[j] >= scheme.region_lo && sweep.eval_x[j] < scheme.region_hi)
                    w[j] = scheme.omega;
            break;
        }
        case WeightKind::spl_threshold: {
            for (std::size_t j = 0; j < n; ++j)
                w[j] = difficulty[j] <= scheme.spl_lambda ? 1.0 : 0.0;
            break;
        }
        case WeightKind::power_difficulty: {
            const double dmax = *std::max_element(difficulty.begin(), difficulty.end());
            if (dmax <= 0.0)
                throw InvalidArgument("weights_for: max difficulty is zero under power scheme");
            if (scheme.gamma == 0.0) break;  // (d/max)^0 == 1 everywhere
            for (std::size_t j = 0; j < n; ++j)
                w[j] = std::pow(difficulty[j] / dmax, scheme.gamma);
            break;
        }
        case WeightKind::adaboost_update:
        case WeightKind::soft_margin_update: {
            // Regression mapping: the agreement term y*f(x) becomes
            // 1 - 2*1[difficulty > median difficulty].
            const double med = detail::median(difficulty);
            for (std::size_t j = 0; j < n; ++j) {
                const double agreement = difficulty[j] > med ? -1.0 : 1.0;
                double exponent = -scheme.alpha * agreement;
                if (scheme.kind == WeightKind::soft_margin_update)
                    exponent -= scheme.soft_c;  // average past weight and |b| taken as 1
                w[j] = std::exp(exponent);
            }
            detail::normalize_mean_one(w);
            break;
        }
    }
    return w;
}

// Argmin over the lambda grid of the weighted mean per-sample error,
// tie-break toward the smaller complexity.
inline Optimum weighted_optimal_complexity(const LambdaSweep& sweep,
                                           const std::vector<double>& weights) {
    const std::size_t n = sweep.eval_count();
    if (weights.size() != n)
        throw InvalidArgument("weighted_optimal_complexity: one weight per eval sample required");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0)
            throw InvalidArgument("weighted_optimal_complexity: weights must be non-negative");
        wsum += w;
    }
    if (wsum == 0.0) throw InvalidArgument("weighted_optimal_complexity: all-zero weights");

    std::vector<double> errs(sweep.lambdas.size(), 0.0);
    for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += weights[j] * sweep.error[li][j];
        errs[li] = acc / wsum;
    }
    return detail::grid_argmin(sweep, errs);
}

enum class Verdict { satisfied, violated, tie };

inline std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::satisfied: return "satisfied";
        case Verdict::violated: return "violated";
        case Verdict::tie: return "tie";
    }
    return "?";
}

struct PropositionReport {
    std::string id;
    Optimum baseline;
    Optimum weighted;
    Verdict verdict = Verdict::tie;
    std::string scheme_description;
    int excluded_samples = 0;  // samples dropped for violating the hypothesis
};

struct PropositionParams {
    double omega = 3.0;                         // region / constant weight
    std::vector<double> gamma_ladder = {0.0, 1.0, 2.0, 4.0};
    DifficultyThresholds thresholds;            // trichotomy bounds for C2/C3
};

namespace detail {

enum class Direction { equal, larger, smaller, non_decreasing_ladder };

inline Verdict directional_verdict(Direction dir, const Optimum& base, const Optimum& weighted) {
    switch (dir) {
        case Direction::equal:
            return base.grid_index == weighted.grid_index ? Verdict::satisfied : Verdict::violated;
        case Direction::larger:
            if (weighted.c_star > base.c_star) return Verdict::satisfied;
            return weighted.c_star == base.c_star ? Verdict::tie : Verdict::violated;
        case Direction::smaller:
            if (weighted.c_star < base.c_star) return Verdict::satisfied;
            return weighted.c_star == base.c_star ? Verdict::tie : Verdict::violated;
        default:
            return Verdict::tie;
    }
}

}  // namespace detail

// Empirical check for one proposition/corollary on a computed sweep. The
// hypotheses are constructed from the sweep's own LD/LDC values; samples that
// would violate a region hypothesis are excluded and counted.
inline PropositionReport check_proposition(const std::string& id, const LambdaSweep& sweep,
                                           const PropositionParams& params = {}) {
    const std::size_t n = sweep.eval_count();
    const Optimum base = optimal_complexity(sweep);
    const std::vector<double> ld = per_sample_ld(sweep);
    std::vector<double> ldc(n);
    for (std::size_t j = 0; j < n; ++j) ldc[j] = ld[j] / base.c_star;
    const double ld_min = *std::min_element(ld.begin(), ld.end());
    const double ld_max = *std::max_element(ld.begin(), ld.end());

    PropositionReport rep;
    rep.id = id;
    rep.baseline = base;

    std::vector<double> w(n, 1.0);
    detail::Direction dir = detail::Direction::larger;

    if (id == "P2") {
        std::fill(w.begin(), w.end(), params.omega);
        dir = detail::Direction::equal;
        rep.scheme_description = "constant omega = " + std::to_string(params.omega);
    } else if (id == "P3" || id == "C1") {
        if (params.omega <= 1.0)
            throw PreconditionError(id + ": requires omega > 1");
        int hard = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (ldc[j] > 1.0) {
                w[j] = params.omega;
                ++hard;
            }
        }
        if (hard == 0) throw PreconditionError(id + ": no sample has LDC > 1");
        dir = detail::Direction::larger;
        rep.scheme_description = "omega = " + std::to_string(params.omega) + " on LDC > 1 (" +
                                 std::to_string(hard) + " samples)";
    } else if (id == "P4") {
        if (params.omega <= 1.0)
            throw PreconditionError(id + ": requires omega > 1");
        int easy = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (ldc[j] < 1.0) {
                w[j] = params.omega;
                ++easy;
            }
        }
        if (easy == 0) throw PreconditionError("P4: no sample has LDC < 1");
        dir = detail::Direction::smaller;
        rep.scheme_description = "omega = " + std::to_string(params.omega) + " on LDC < 1 (" +
                                 std::to_string(easy) + " samples)";
    } else if (id == "P5" || id == "P6") {
        if (ld_max <= ld_min)
            throw PreconditionError(id + ": LD is constant, min w == max w");
        for (std::size_t j = 0; j < n; ++j) {
            const double t = (ld[j] - ld_min) / (ld_max - ld_min);
            w[j] = id == "P5" ? t : 1.0 - t;
        }
        dir = id == "P5" ? detail::Direction::larger : detail::Direction::smaller;
        rep.scheme_description = id == "P5" ? "non-decreasing u(LD) = (LD - min)/range"
                                            : "non-increasing u(LD) = (max - LD)/range";
    } else if (id == "C2" || id == "C3") {
        const auto& th = params.thresholds;
        for (std::size_t j = 0; j < n; ++j) {
            int tier = ldc[j] <= th.tau_e ? 0 : (ldc[j] <= th.tau_h ? 1 : 2);
            const double tiers_up[] = {1.0, 2.0, 3.0};
            const double tiers_down[] = {3.0, 2.0, 1.0};
            w[j] = id == "C2" ? tiers_up[tier] : tiers_down[tier];
        }
        dir = id == "C2" ? detail::Direction::larger : detail::Direction::smaller;
        rep.scheme_description = id == "C2" ? "trichotomy weights easy<=medium<=hard (1,2,3)"
                                            : "trichotomy weights easy>=medium>=hard (3,2,1)";
    } else if (id == "C4") {
        if (ld_max <= 0.0) throw PreconditionError("C4: max LD is zero");
        rep.scheme_description = "power weights (LD/max)^gamma over the ladder";
        Verdict verdict = Verdict::tie;
        double prev_c = 0.0;
        bool first = true;
        Optimum last;
        for (double gamma : params.gamma_ladder) {
            WeightScheme s;
            s.kind = WeightKind::power_difficulty;
            s.gamma = gamma;
            last = weighted_optimal_complexity(sweep, weights_for(s, sweep, ld));
            if (!first) {
                if (last.c_star < prev_c) {
                    verdict = Verdict::violated;
                    break;
                }
                if (last.c_star > prev_c && verdict != Verdict::violated)
                    verdict = Verdict::satisfied;
            }
            prev_c = last.c_star;
            first = false;
        }
        rep.weighted = last;
        rep.verdict = verdict;
        return rep;
    } else {
        throw InvalidArgument("check_proposition: unknown id " + id);
    }

    rep.weighted = weighted_optimal_complexity(sweep, w);
    rep.verdict = detail::directional_verdict(dir, base, rep.weighted);
    return rep;
}

}  // namespace ldlab
