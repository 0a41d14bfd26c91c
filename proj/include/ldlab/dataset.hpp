#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldlab/errors.hpp"
#include "ldlab/rng.hpp"

namespace ldlab {

// Half-up rounding used everywhere an exact count is derived from a rate.
inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

struct Sample {
    int id = 0;
    std::vector<double> features;
    int label = -1;        // class index; -1 for regression
    int clean_label = -1;  // label before noise injection
    double target = 0.0;   // observed (possibly noisy) regression target
    double clean_target = 0.0;
};

struct GroundTruth {
    std::set<int> noisy_ids;
    std::vector<double> margins;        // per sample; empty when not applicable
    std::vector<double> uncertainties;  // per sample; empty when not applicable
    std::vector<int> class_sizes;
};

struct Dataset {
    std::vector<Sample> samples;
    int class_count = 0;  // 0 => regression
    GroundTruth truth;

    bool is_classification() const { return class_count > 0; }
    std::size_t size() const { return samples.size(); }
    int dimension() const {
        return samples.empty() ? 0 : static_cast<int>(samples.front().features.size());
    }
};

enum class NoiseKind { symmetric, pair_flip, salt_pepper };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;  // v in [0, 1]
    double snr = 0.4;   // salt_pepper only, fraction of clean coordinates
    std::uint64_t seed = 0;
};

namespace detail {

// Class means at mutual distance `separation`: vertices of a regular simplex
// embedded in the first (class_count - 1) coordinates.
inline std::vector<Eigen::VectorXd> simplex_means(int class_count, int dimension,
                                                  double separation) {
    const int c = class_count;
    if (dimension < c - 1)
        throw InvalidArgument("make_blobs: dimension must be >= class_count - 1");
    // Scaled standard-basis vertices in R^c have pairwise distance s*sqrt(2);
    // center them and express in an orthonormal basis of the sum-zero hyperplane.
    const double s = separation / std::sqrt(2.0);
    Eigen::MatrixXd verts = Eigen::MatrixXd::Identity(c, c) * s;
    verts.rowwise() -= verts.colwise().mean();
    // Orthonormal basis of the hyperplane orthogonal to the all-ones vector.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c, c);
    m.col(0) = Eigen::VectorXd::Constant(c, 1.0 / std::sqrt(static_cast<double>(c)));
    for (int i = 1; i < c; ++i) m(i - 1, i) = 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd basis = q.rightCols(c - 1);  // spans the sum-zero hyperplane

    std::vector<Eigen::VectorXd> means(c);
    for (int j = 0; j < c; ++j) {
        Eigen::VectorXd coords = basis.transpose() * verts.row(j).transpose();
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(dimension);
        mu.head(c - 1) = coords;
        means[j] = mu;
    }
    return means;
}

inline double posterior_entropy(const Eigen::VectorXd& x,
                                const std::vector<Eigen::VectorXd>& means,
                                const std::vector<double>& priors) {
    const int c = static_cast<int>(means.size());
    std::vector<double> logp(c);
    double maxlog = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j) {
        logp[j] = std::log(priors[j]) - 0.5 * (x - means[j]).squaredNorm();
        maxlog = std::max(maxlog, logp[j]);
    }
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logp[j] - maxlog);
    double h = 0.0;
    for (int j = 0; j < c; ++j) {
        const double p = std::exp(logp[j] - maxlog) / z;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Signed distance from x to the nearest bisector between its own class mean
// and any other class mean (positive on the own-class side).
inline double bisector_margin(const Eigen::VectorXd& x, int own,
                              const std::vector<Eigen::VectorXd>& means) {
    double margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(means.size()); ++j) {
        if (j == own) continue;
        Eigen::VectorXd dir = means[own] - means[j];
        const double norm = dir.norm();
        Eigen::VectorXd mid = 0.5 * (means[own] + means[j]);
        margin = std::min(margin, (x - mid).dot(dir) / norm);
    }
    return margin;
}

// Choose k distinct indices from [0, n) uniformly (partial Fisher-Yates).
inline std::vector<int> choose_distinct(int n, int k, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

// Gaussian clusters with unit covariance, one cluster per class. Ground truth
// records class sizes, analytic margins and posterior entropies.
inline Dataset make_blobs(int class_count, const std::vector<int>& per_class_counts,
                          int dimension, double separation, std::uint64_t seed) {
    if (class_count < 2) throw InvalidArgument("make_blobs: class_count must be >= 2");
    if (static_cast<int>(per_class_counts.size()) != class_count)
        throw InvalidArgument("make_blobs: per_class_counts size must equal class_count");
    for (int n : per_class_counts)
        if (n <= 0) throw InvalidArgument("make_blobs: per-class counts must be positive");
    if (dimension <= 0) throw InvalidArgument("make_blobs: dimension must be positive");
    if (separation <= 0.0) throw InvalidArgument("make_blobs: separation must be positive");

    const auto means = detail::simplex_means(class_count, dimension, separation);
    const int total = std::accumulate(per_class_counts.begin(), per_class_counts.end(), 0);
    std::vector<double> priors(class_count);
    for (int j = 0; j < class_count; ++j)
        priors[j] = static_cast<double>(per_class_counts[j]) / total;

    Dataset d;
    d.class_count = class_count;
    d.truth.class_sizes = per_class_counts;
    d.truth.margins.reserve(total);
    d.truth.uncertainties.reserve(total);
    Rng rng(seed);
    int id = 0;
    for (int j = 0; j < class_count; ++j) {
        for (int n = 0; n < per_class_counts[j]; ++n) {
            Eigen::VectorXd x = means[j];
            for (int k = 0; k < dimension; ++k) x[k] += rng.normal();
            Sample s;
            s.id = id++;
            s.features.assign(x.data(), x.data() + dimension);
            s.label = j;
            s.clean_label = j;
            d.samples.push_back(std::move(s));
            d.truth.margins.push_back(detail::bisector_margin(x, j, means));
            d.truth.uncertainties.push_back(detail::posterior_entropy(x, means, priors));
        }
    }
    return d;
}

// Relabels exactly round(N*v) distinct samples. Returns a new dataset; the
// input is not mutated.
inline Dataset inject_label_noise(const Dataset& d, const NoiseSpec& spec) {
    if (!d.is_classification())
        throw Unsupported("inject_label_noise: regression dataset not supported");
    if (spec.kind != NoiseKind::symmetric && spec.kind != NoiseKind::pair_flip)
        throw InvalidArgument("inject_label_noise: kind must be symmetric or pair_flip");
    if (spec.rate < 0.0 || spec.rate > 1.0)
        throw InvalidArgument("inject_label_noise: rate must be in [0, 1]");

    Dataset out = d;
    out.truth.noisy_ids.clear();
    const int n = static_cast<int>(d.size());
    const int k = round_half_up(n * spec.rate);
    if (k == 0) return out;

    Rng rng(spec.seed);
    const auto chosen = detail::choose_distinct(n, k, rng);
    const int c = d.class_count;
    for (int pos : chosen) {
        Sample& s = out.samples[pos];
        if (spec.kind == NoiseKind::pair_flip) {
            s.label = (s.label + 1) % c;
        } else {
            // Uniform over the other c-1 classes.
            int nl = static_cast<int>(rng.below(static_cast<std::uint64_t>(c - 1)));
            if (nl >= s.label) ++nl;
            s.label = nl;
        }
        out.truth.noisy_ids.insert(s.id);
    }
    return out;
}

// Salt-and-pepper feature corruption: in each selected sample a fraction
// (1 - snr) of coordinates (at least one) is set to the per-column dataset
// minimum or maximum with equal probability.
inline Dataset inject_feature_noise(const Dataset& d, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::salt_pepper)
        throw InvalidArgument("inject_feature_noise: kind must be salt_pepper");
    if (!(spec.snr > 0.0 && spec.snr < 1.0))
        throw InvalidArgument("inject_feature_noise: snr must be in (0, 1)");
    if (spec.rate < 0.0 || spec.rate > 1.0)
        throw InvalidArgument("inject_feature_noise: rate must be in [0, 1]");

    const int n = static_cast<int>(d.size());
    const int dim = d.dimension();
    std::vector<double> col_min(dim, std::numeric_limits<double>::infinity());
    std::vector<double> col_max(dim, -std::numeric_limits<double>::infinity());
    for (const Sample& s : d.samples) {
        for (int j = 0; j < dim; ++j) {
            col_min[j] = std::min(col_min[j], s.features[j]);
            col_max[j] = std::max(col_max[j], s.features[j]);
        }
    }

    Dataset out = d;
    out.truth.noisy_ids.clear();
    const int k = round_half_up(n * spec.rate);
    if (k == 0) return out;

    Rng rng(spec.seed);
    const auto chosen = detail::choose_distinct(n, k, rng);
    const int corrupt = std::min(dim, std::max(1, round_half_up((1.0 - spec.snr) * dim)));
    for (int pos : chosen) {
        Sample& s = out.samples[pos];
        const auto coords = detail::choose_distinct(dim, corrupt, rng);
        for (int j : coords)
            s.features[j] = (rng.uniform() < 0.5) ? col_min[j] : col_max[j];
        out.truth.noisy_ids.insert(s.id);
    }
    return out;
}

// Target curve of the regression examples: y = 3 - sin(3x)/x, with the
// removable singularity at x = 0 filled by its limit (sin(3x)/x -> 3).
inline double regression_target(double x) {
    if (x == 0.0) return 0.0;
    return 3.0 - std::sin(3.0 * x) / x;
}

// Stratification regions used by the imbalanced regression example.
inline constexpr std::array<double, 4> kRegionEdges = {0.0, 1.5, 3.5, 5.0};

inline int region_of(double x) {
    if (x < kRegionEdges[1]) return 0;
    if (x < kRegionEdges[2]) return 1;
    return 2;
}

// Draws n samples of x from [0, 5]. When region_weights is given, the three
// regions [0,1.5), [1.5,3.5), [3.5,5] receive counts proportional to the
// weights (largest-remainder apportionment), sampled uniformly within each
// region. Both the clean target and the noisy observation are stored.
inline Dataset sample_regression_example(int n,
                                         std::optional<std::array<double, 3>> region_weights,
                                         double noise_sigma, std::uint64_t seed) {
    if (n <= 0) throw InvalidArgument("sample_regression_example: n must be positive");
    if (noise_sigma < 0.0)
        throw InvalidArgument("sample_regression_example: noise_sigma must be >= 0");

    std::array<int, 3> counts = {0, 0, 0};
    if (region_weights) {
        const auto& w = *region_weights;
        const double total = w[0] + w[1] + w[2];
        if (total <= 0.0 || w[0] < 0.0 || w[1] < 0.0 || w[2] < 0.0)
            throw InvalidArgument("sample_regression_example: bad region weights");
        std::array<double, 3> exact{};
        int assigned = 0;
        for (int r = 0; r < 3; ++r) {
            exact[r] = n * w[r] / total;
            counts[r] = static_cast<int>(std::floor(exact[r]));
            assigned += counts[r];
        }
        // Distribute the remainder to the largest fractional parts.
        std::array<int, 3> order = {0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
        });
        for (int i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
    }

    Dataset d;
    d.class_count = 0;
    Rng rng(seed);
    int id = 0;
    auto push = [&](double x) {
        Sample s;
        s.id = id++;
        s.features = {x};
        s.clean_target = regression_target(x);
        s.target = s.clean_target + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
        d.samples.push_back(std::move(s));
    };
    if (region_weights) {
        for (int r = 0; r < 3; ++r)
            for (int i = 0; i < counts[r]; ++i)
                push(rng.uniform(kRegionEdges[r], kRegionEdges[r + 1]));
    } else {
        for (int i = 0; i < n; ++i) push(rng.uniform(0.0, 5.0));
    }
    return d;
}

}  // namespace ldlab
