#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "ldlab/dataset.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/geld.hpp"

namespace ldlab {

struct DetectionSpec {
    double v = 0.2;   // assumed noise rate
    double r = 1.0;   // selection multiplier
    int repeats = 1;
};

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// The round(n*v*r) samples with the largest err; boundary ties break toward
// the smaller sample id.
inline std::set<int> top_k_select(const DifficultyReport& report, const DetectionSpec& spec,
                                  int n) {
    if (static_cast<int>(report.rows.size()) != n)
        throw InvalidArgument("top_k_select: report must cover n samples");
    const int k = round_half_up(n * spec.v * spec.r);
    if (k > n) throw InvalidArgument("top_k_select: round(n*v*r) exceeds n");

    std::vector<const DifficultyRow*> rows;
    rows.reserve(n);
    for (const auto& r : report.rows) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const DifficultyRow* a, const DifficultyRow* b) {
        if (a->err != b->err) return a->err > b->err;
        return a->id < b->id;
    });
    std::set<int> selected;
    for (int i = 0; i < k; ++i) selected.insert(rows[i]->id);
    return selected;
}

inline PrecisionRecall f1_against(const std::set<int>& selected, const std::set<int>& truth) {
    if (truth.empty()) return selected.empty() ? PrecisionRecall{1.0, 1.0, 1.0}
                                               : PrecisionRecall{0.0, 0.0, 0.0};
    int tp = 0;
    for (int id : selected)
        if (truth.count(id)) ++tp;
    PrecisionRecall pr;
    pr.precision = selected.empty() ? 0.0 : static_cast<double>(tp) / selected.size();
    pr.recall = static_cast<double>(tp) / truth.size();
    pr.f1 = (pr.precision + pr.recall) > 0.0
                ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)
                : 0.0;
    return pr;
}

// Spearman rank correlation with average ranks for ties.
inline double rank_correlation(const std::vector<double>& scores,
                               const std::vector<double>& reference) {
    if (scores.size() != reference.size() || scores.empty())
        throw InvalidArgument("rank_correlation: vectors must be non-empty and equal-sized");

    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(scores);
    const auto rb = ranks(reference);

    const double n = static_cast<double>(scores.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0)
        throw UndefinedCorrelation("rank_correlation: constant input vector");
    return cov / std::sqrt(va * vb);
}

// Per-class counts of samples inside the top-`top_fraction` hardest set.
inline std::vector<int> class_summary(const DifficultyReport& report, const Dataset& d,
                                      double top_fraction) {
    if (!d.is_classification())
        throw InvalidArgument("class_summary: classification dataset required");
    const int n = static_cast<int>(d.size());
    DetectionSpec spec;
    spec.v = top_fraction;
    spec.r = 1.0;
    const auto selected = top_k_select(report, spec, n);
    std::vector<int> counts(d.class_count, 0);
    for (const Sample& s : d.samples)
        if (selected.count(s.id)) ++counts[s.clean_label];
    return counts;
}

inline double mean_f1(const std::vector<double>& per_repeat_f1) {
    if (per_repeat_f1.empty()) throw InvalidArgument("mean_f1: empty repeat list");
    return std::accumulate(per_repeat_f1.begin(), per_repeat_f1.end(), 0.0) /
           static_cast<double>(per_repeat_f1.size());
}

}  // namespace ldlab
