#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ldlab/dataset.hpp"
#include "ldlab/regression_lab.hpp"

using namespace ldlab;

namespace {

Dataset regression_points(const std::vector<double>& xs, const std::vector<double>& ys) {
    Dataset d;
    d.class_count = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Sample s;
        s.id = static_cast<int>(i);
        s.features = {xs[i]};
        s.target = ys[i];
        s.clean_target = ys[i];
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace

TEST_CASE("default lambda grid spans e^-7 .. e^1") {
    const auto grid = default_lambda_grid();
    REQUIRE(grid.size() == 9);
    CHECK(grid.front() == doctest::Approx(std::exp(-7.0)).epsilon(1e-15));
    CHECK(grid.back() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
}

TEST_CASE("ridge on constant targets reduces to the intercept") {
    Dataset d = regression_points({0.5, 1.0, 2.0, 3.0, 4.5}, {3.0, 3.0, 3.0, 3.0, 3.0});
    PolynomialModel m = fit_ridge(d, 1.0, 4);
    for (double w : m.weights) CHECK(std::abs(w) < 1e-9);
    CHECK(m.intercept == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("huge penalty drives the weights toward zero") {
    Dataset d = sample_regression_example(50, std::nullopt, 0.5, 3);
    auto norm = [&](double lambda) {
        PolynomialModel m = fit_ridge(d, lambda, 6);
        double acc = 0.0;
        for (double w : m.weights) acc += w * w;
        return std::sqrt(acc);
    };
    CHECK(norm(1e8) < norm(1.0) / 100.0);
    CHECK(norm(1e14) < 1e-6);
}

TEST_CASE("ridge matches an independent normal-equations solve") {
    // Degree 2 is well conditioned, so the plain normal equations are a valid
    // independent oracle here.
    const std::vector<double> xs = {0.2, 0.9, 1.7, 2.8, 4.1};
    const std::vector<double> ys = {1.0, 0.3, -0.4, 2.2, 5.0};
    Dataset d = regression_points(xs, ys);
    const double lambda = 1.0;
    PolynomialModel m = fit_ridge(d, lambda, 2);

    Eigen::MatrixXd x(5, 2);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
        x(i, 0) = xs[i];
        x(i, 1) = xs[i] * xs[i];
        y[i] = ys[i];
    }
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd xc = x.rowwise() - mean;
    Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::MatrixXd normal = xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd w = normal.fullPivLu().solve(xc.transpose() * yc);

    CHECK(m.weights[0] == doctest::Approx(w[0]).epsilon(1e-10));
    CHECK(m.weights[1] == doctest::Approx(w[1]).epsilon(1e-10));
    CHECK(m.intercept == doctest::Approx(y.mean() - mean.dot(w)).epsilon(1e-10));
}

TEST_CASE("fit_ridge validates its arguments") {
    Dataset d = regression_points({1.0, 2.0}, {1.0, 2.0});
    CHECK_THROWS_AS(fit_ridge(d, 0.0, 2), InvalidArgument);
    CHECK_THROWS_AS(fit_ridge(d, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(fit_ridge(Dataset{}, 1.0, 2), InvalidArgument);
    Dataset big = regression_points({1e30}, {1.0});
    CHECK_THROWS_AS(fit_ridge(big, 1.0, 20), InvalidArgument);
}

TEST_CASE("model complexity evaluates the weighted squared norm") {
    PolynomialModel zero;
    zero.weights.assign(10, 0.0);
    CHECK(model_complexity(zero) == 0.0);

    PolynomialModel first;
    first.weights.assign(10, 0.0);
    first.weights[0] = 1.0;
    CHECK(model_complexity(first) == doctest::Approx(0.01).epsilon(1e-15));

    PolynomialModel two;
    two.weights = {2.0, 3.0};
    CHECK(model_complexity(two) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("identical training sets give a zero-variance ensemble") {
    // train_size equal to the pool size forces every member onto the same data.
    Dataset pool = sample_regression_example(60, std::nullopt, 0.0, 4);
    Dataset eval_set = sample_regression_example(30, std::nullopt, 0.0, 5);
    RidgeConfig cfg;
    cfg.degree = 5;
    cfg.ensemble_size = 4;
    cfg.train_size = 60;
    LambdaSweep sweep = run_sweep(cfg, pool, eval_set, 1);
    for (const auto& row : sweep.variance)
        for (double v : row) CHECK(std::abs(v) < 1e-16);
}

TEST_CASE("sweep satisfies the error decomposition and aggregation identities") {
    Dataset pool = sample_regression_example(400, std::nullopt, 1.2, 6);
    Dataset eval_set = sample_regression_example(50, std::nullopt, 0.0, 7);
    RidgeConfig cfg;
    cfg.ensemble_size = 8;
    cfg.train_size = 100;
    const std::uint64_t seed = 2;
    LambdaSweep sweep = run_sweep(cfg, pool, eval_set, seed);

    for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
        double mean_err = 0.0;
        for (std::size_t j = 0; j < sweep.eval_count(); ++j) {
            CHECK(sweep.error[li][j] == sweep.bias[li][j] + sweep.variance[li][j]);
            mean_err += sweep.error[li][j];
        }
        mean_err /= static_cast<double>(sweep.eval_count());
        CHECK(mean_err == doctest::Approx(sweep.mean_error[li]).epsilon(1e-12));
    }

    // Rebuild the ensemble from the same seeds and confirm that the mean
    // squared deviation of member predictions around the clean target equals
    // bias + variance.
    std::vector<Dataset> subsets(cfg.ensemble_size);
    for (int t = 0; t < cfg.ensemble_size; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const auto idx = detail::stratified_resample(pool, cfg.train_size, rng);
        subsets[t].class_count = 0;
        for (int i : idx) subsets[t].samples.push_back(pool.samples[i]);
    }
    for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
        std::vector<PolynomialModel> models;
        for (const Dataset& s : subsets)
            models.push_back(fit_ridge(s, sweep.lambdas[li], cfg.degree));
        for (std::size_t j = 0; j < sweep.eval_count(); ++j) {
            double mse = 0.0;
            for (const auto& m : models) {
                const double diff =
                    eval_set.samples[j].clean_target - m.predict(eval_set.samples[j].features[0]);
                mse += diff * diff;
            }
            mse /= models.size();
            CHECK(std::abs(mse - sweep.bias[li][j] - sweep.variance[li][j]) <= 1e-9);
        }
    }
}

TEST_CASE("complexity is non-increasing along the lambda grid") {
    Dataset pool = sample_regression_example(800, std::nullopt, 1.2, 9);
    Dataset eval_set = sample_regression_example(50, std::nullopt, 0.0, 10);
    RidgeConfig cfg;
    cfg.ensemble_size = 10;
    cfg.train_size = 200;
    LambdaSweep sweep = run_sweep(cfg, pool, eval_set, 11);
    int inversions = 0;
    for (std::size_t i = 1; i < sweep.complexity.size(); ++i) {
        if (sweep.complexity[i] > sweep.complexity[i - 1]) {
            ++inversions;
            CHECK(sweep.complexity[i] <= sweep.complexity[i - 1] * 1.01);
        }
    }
    CHECK(inversions <= 1);
}

TEST_CASE("run_sweep validates its configuration") {
    Dataset pool = sample_regression_example(50, std::nullopt, 0.0, 1);
    Dataset eval_set = sample_regression_example(10, std::nullopt, 0.0, 2);
    RidgeConfig cfg;
    cfg.lambda_grid.clear();
    CHECK_THROWS_AS(run_sweep(cfg, pool, eval_set, 0), InvalidArgument);
    cfg = RidgeConfig{};
    cfg.lambda_grid = {1.0, 1.0};
    CHECK_THROWS_AS(run_sweep(cfg, pool, eval_set, 0), InvalidArgument);
    cfg = RidgeConfig{};
    cfg.ensemble_size = 1;
    CHECK_THROWS_AS(run_sweep(cfg, pool, eval_set, 0), InvalidArgument);
}

TEST_CASE("grid argmin picks interior minima and breaks ties by complexity") {
    LambdaSweep sweep;
    sweep.lambdas = {0.1, 0.2, 0.3, 0.4};
    sweep.complexity = {8.0, 4.0, 2.0, 1.0};
    sweep.mean_error = {0.9, 0.2, 0.5, 0.9};
    Optimum o = optimal_complexity(sweep);
    CHECK(o.grid_index == 1);
    CHECK(o.lambda_star == 0.2);
    CHECK(o.c_star == 4.0);

    sweep.mean_error = {0.9, 0.2, 0.2, 0.9};  // tie: prefer smaller complexity
    o = optimal_complexity(sweep);
    CHECK(o.grid_index == 2);
    CHECK(o.c_star == 2.0);
}

TEST_CASE("region and sample optima validate their scopes") {
    Dataset pool = sample_regression_example(100, std::nullopt, 0.5, 3);
    Dataset eval_set = sample_regression_example(20, std::nullopt, 0.0, 4);
    RidgeConfig cfg;
    cfg.ensemble_size = 3;
    cfg.train_size = 50;
    LambdaSweep sweep = run_sweep(cfg, pool, eval_set, 5);
    CHECK_THROWS_AS(optimal_complexity(sweep, 10.0, 11.0), InvalidArgument);
    CHECK_THROWS_AS(optimal_complexity(sweep, 999999), InvalidArgument);
    // region covering everything equals the whole-set optimum
    Optimum whole = optimal_complexity(sweep);
    Optimum all = optimal_complexity(sweep, 0.0, 5.000001);
    CHECK(whole.grid_index == all.grid_index);
}

TEST_CASE("difficulty verdicts follow the threshold definitions") {
    LambdaSweep sweep;
    sweep.lambdas = {0.1, 0.2, 0.3};
    sweep.complexity = {6.0, 3.0, 1.0};
    sweep.mean_error = {0.5, 0.1, 0.4};  // whole optimum at index 1, c* = 3
    sweep.eval_ids = {7, 8, 9};
    sweep.eval_x = {0.5, 2.0, 4.0};
    sweep.bias.assign(3, std::vector<double>(3, 0.0));
    sweep.variance.assign(3, std::vector<double>(3, 0.0));
    // sample 7 optimal at index 1 (ldc 1), sample 8 at index 0 (ldc 2),
    // sample 9 at index 2 (ldc 1/3)
    sweep.error = {{0.5, 0.1, 0.9}, {0.1, 0.5, 0.9}, {0.5, 0.9, 0.1}};

    DifficultyThresholds th;
    auto v7 = difficulty_verdict(sweep, 7, th, PartitionMode::dichotomy);
    CHECK(v7.ldc == doctest::Approx(1.0));
    CHECK(v7.partition == Partition::easy);  // the <= branch of the dichotomy

    auto v7t = difficulty_verdict(sweep, 7, th, PartitionMode::trichotomy);
    CHECK(v7t.partition == Partition::medium);  // 0.8 < 1.0 <= 1.25

    auto v8 = difficulty_verdict(sweep, 8, th, PartitionMode::trichotomy);
    CHECK(v8.ldc == doctest::Approx(2.0));
    CHECK(v8.partition == Partition::hard);

    th.tau_q = 1.5;
    auto v8q = difficulty_verdict(sweep, 8, th, PartitionMode::trichotomy);
    CHECK(v8q.partition == Partition::quite_hard);

    auto v9 = difficulty_verdict(sweep, 9, th, PartitionMode::trichotomy);
    CHECK(v9.partition == Partition::easy);

    DifficultyThresholds bad;
    bad.tau_e = 1.5;
    CHECK_THROWS_AS(difficulty_verdict(sweep, 7, bad), InvalidArgument);
    bad = DifficultyThresholds{};
    bad.tau_q = 1.1;  // must exceed tau_h
    CHECK_THROWS_AS(difficulty_verdict(sweep, 7, bad), InvalidArgument);
}
