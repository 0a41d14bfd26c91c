#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ldlab/dataset.hpp"
#include "ldlab/evaluate.hpp"

using namespace ldlab;

namespace {

DifficultyReport report_from(const std::vector<double>& errs) {
    DifficultyReport r;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        DifficultyRow row;
        row.id = static_cast<int>(i);
        row.err = errs[i];
        r.rows.push_back(row);
    }
    detail::rank_by_err(r);
    return r;
}

}  // namespace

TEST_CASE("top_k_select takes the largest scores") {
    const auto report = report_from({0.1, 0.9, 0.5, 0.7, 0.2});
    DetectionSpec spec;
    spec.v = 0.4;
    spec.r = 1.0;  // k = round(5*0.4) = 2
    CHECK(top_k_select(report, spec, 5) == std::set<int>{1, 3});

    spec.r = 1.5;  // k = round(5*0.6) = 3
    CHECK(top_k_select(report, spec, 5) == std::set<int>{1, 2, 3});

    spec.v = 1.0;
    spec.r = 1.0;
    CHECK(top_k_select(report, spec, 5).size() == 5);
}

TEST_CASE("top_k_select breaks ties toward smaller ids and k rounds half up") {
    const auto report = report_from({0.5, 0.5, 0.5, 0.5});
    DetectionSpec spec;
    spec.v = 0.375;  // k = round(1.5) = 2
    spec.r = 1.0;
    CHECK(top_k_select(report, spec, 4) == std::set<int>{0, 1});
}

TEST_CASE("top_k_select grows monotonically with r") {
    const auto report = report_from({0.3, 0.8, 0.1, 0.9, 0.4, 0.6, 0.2, 0.7, 0.5, 0.05});
    DetectionSpec spec;
    spec.v = 0.4;
    std::set<int> prev;
    for (double r : {0.5, 0.75, 1.0, 1.5, 2.0}) {
        spec.r = r;
        const auto cur = top_k_select(report, spec, 10);
        for (int id : prev) CHECK(cur.count(id) == 1);
        prev = cur;
    }
}

TEST_CASE("top_k_select rejects k beyond n and size mismatches") {
    const auto report = report_from({0.1, 0.2});
    DetectionSpec spec;
    spec.v = 1.0;
    spec.r = 2.0;
    CHECK_THROWS_AS(top_k_select(report, spec, 2), InvalidArgument);
    spec.r = 1.0;
    CHECK_THROWS_AS(top_k_select(report, spec, 3), InvalidArgument);
}

TEST_CASE("f1 of a perfect selection is one") {
    const auto pr = f1_against({1, 2, 3}, {1, 2, 3});
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
    CHECK(pr.f1 == 1.0);
}

TEST_CASE("f1 of a disjoint selection is zero") {
    const auto pr = f1_against({4, 5}, {1, 2, 3});
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
    CHECK(pr.f1 == 0.0);
}

TEST_CASE("f1 on a partial overlap") {
    // selected {1,2,4,5}, truth {1,2,3}: precision 0.5, recall 2/3, f1 = 4/7
    const auto pr = f1_against({1, 2, 4, 5}, {1, 2, 3});
    CHECK(pr.precision == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pr.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(pr.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("f1 edge rules for empty sets") {
    CHECK(f1_against({}, {}).f1 == 1.0);
    CHECK(f1_against({1}, {}).f1 == 0.0);
    CHECK(f1_against({}, {1}).f1 == 0.0);
}

TEST_CASE("rank correlation on exact and reversed orders") {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {10, 20, 30, 40, 50};
    const std::vector<double> c = {5, 4, 3, 2, 1};
    CHECK(rank_correlation(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rank_correlation(a, c) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("rank correlation with one swapped pair") {
    // ranks (1,2,3,4) vs (1,3,2,4): rho = 1 - 6*2/(4*15) = 0.8
    const std::vector<double> a = {1, 2, 3, 4};
    const std::vector<double> b = {1, 3, 2, 4};
    CHECK(rank_correlation(a, b) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("rank correlation uses average ranks for ties") {
    // (1,1,2) gets ranks (1.5,1.5,3); against (1,2,3) the Pearson of the rank
    // vectors is sqrt(3)/2.
    const std::vector<double> a = {1, 1, 2};
    const std::vector<double> b = {1, 2, 3};
    CHECK(rank_correlation(a, b) == doctest::Approx(0.8660254).epsilon(1e-6));
}

TEST_CASE("rank correlation rejects constant or mismatched input") {
    const std::vector<double> flat = {2, 2, 2};
    const std::vector<double> b = {1, 2, 3};
    CHECK_THROWS_AS(rank_correlation(flat, b), UndefinedCorrelation);
    CHECK_THROWS_AS(rank_correlation(b, flat), UndefinedCorrelation);
    const std::vector<double> short_vec = {1, 2};
    CHECK_THROWS_AS(rank_correlation(short_vec, b), InvalidArgument);
    CHECK_THROWS_AS(rank_correlation({}, {}), InvalidArgument);
}

TEST_CASE("class_summary counts hardest samples by clean class") {
    Dataset d = make_blobs(2, {4, 4}, 2, 6.0, 3);
    // make the four class-1 samples the hardest
    std::vector<double> errs(8, 0.1);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.samples[i].clean_label == 1) errs[i] = 1.0;
    DifficultyReport report;
    for (std::size_t i = 0; i < 8; ++i) {
        DifficultyRow row;
        row.id = d.samples[i].id;
        row.err = errs[i];
        report.rows.push_back(row);
    }
    detail::rank_by_err(report);
    const auto counts = class_summary(report, d, 0.5);  // top 4
    CHECK(counts == std::vector<int>{0, 4});
}

TEST_CASE("mean_f1 averages and rejects empty input") {
    CHECK(mean_f1({0.5, 0.7, 0.9}) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK_THROWS_AS(mean_f1({}), InvalidArgument);
}
