#include <doctest.h>

#include <cmath>
#include <vector>

#include "ldlab/dataset.hpp"
#include "ldlab/learners.hpp"

using namespace ldlab;

namespace {

// Central finite differences against the analytic gradient.
double max_grad_error(Network& net, const Eigen::MatrixXd& x, const std::vector<int>& y,
                      double l2) {
    const auto [loss, grad] = net.loss_and_grad(x, y, l2);
    (void)loss;
    auto params = net.parameters();
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto bumped = params;
        bumped[p] = params[p] + h;
        net.set_parameters(bumped);
        const double up = net.loss(x, y, l2);
        bumped[p] = params[p] - h;
        net.set_parameters(bumped);
        const double down = net.loss(x, y, l2);
        worst = std::max(worst, std::abs((up - down) / (2 * h) - grad[p]));
    }
    net.set_parameters(params);
    return worst;
}

Eigen::MatrixXd tiny_inputs() {
    Eigen::MatrixXd x(5, 3);
    x << 0.2, -1.1, 0.7,
         1.5, 0.3, -0.4,
         -0.8, 0.9, 1.2,
         0.05, -0.6, -1.3,
         2.1, 0.0, 0.4;
    return x;
}

}  // namespace

TEST_CASE("softmax gradient matches finite differences") {
    LearnerSpec spec;
    spec.kind = LearnerKind::softmax_regression;
    spec.seed = 4;
    Network net(spec, 3, 4);
    // perturb away from the zero init so the check is not at a stationary point
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] = 0.3 * std::sin(static_cast<double>(i) + 1.0);
    net.set_parameters(params);
    const std::vector<int> y = {0, 2, 1, 3, 2};
    CHECK(max_grad_error(net, tiny_inputs(), y, 0.0) < 1e-5);
    CHECK(max_grad_error(net, tiny_inputs(), y, 0.01) < 1e-5);
}

TEST_CASE("mlp gradient matches finite differences") {
    LearnerSpec spec;
    spec.kind = LearnerKind::mlp;
    spec.hidden_sizes = {6, 5};
    spec.seed = 9;
    Network net(spec, 3, 3);
    const std::vector<int> y = {0, 2, 1, 0, 2};
    CHECK(max_grad_error(net, tiny_inputs(), y, 0.0) < 1e-5);
    CHECK(max_grad_error(net, tiny_inputs(), y, 0.05) < 1e-5);
}

TEST_CASE("zero-initialized softmax predicts the uniform distribution") {
    LearnerSpec spec;
    spec.kind = LearnerKind::softmax_regression;
    Network net(spec, 2, 5);
    Eigen::MatrixXd x(2, 2);
    x << 3.0, -1.0, 0.5, 2.0;
    const Eigen::MatrixXd p = net.predict_proba(x);
    for (int i = 0; i < p.rows(); ++i)
        for (int c = 0; c < p.cols(); ++c)
            CHECK(p(i, c) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("probability rows sum to one") {
    LearnerSpec spec;
    spec.kind = LearnerKind::mlp;
    spec.hidden_sizes = {8};
    spec.seed = 77;
    Network net(spec, 4, 6);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 4) * 50.0;  // large logits too
    const Eigen::MatrixXd p = net.predict_proba(x);
    for (int i = 0; i < p.rows(); ++i) {
        CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.row(i).minCoeff() >= 0.0);
    }
}

TEST_CASE("fit reaches high validation accuracy on well separated blobs") {
    Dataset train = make_blobs(3, {60, 60, 60}, 2, 10.0, 31);
    Dataset val = make_blobs(3, {30, 30, 30}, 2, 10.0, 32);
    LearnerSpec spec;
    spec.kind = LearnerKind::softmax_regression;
    spec.epochs = 20;
    spec.learning_rate = 0.2;
    spec.batch_size = 16;
    spec.seed = 5;
    const FittedModel m = fit(spec, train, val);
    CHECK(m.validation_accuracy >= 0.99);
    CHECK(m.selected_epoch >= 1);
    CHECK(m.selected_epoch <= 20);
}

TEST_CASE("a single epoch selects epoch one") {
    Dataset train = make_blobs(2, {20, 20}, 2, 6.0, 1);
    Dataset val = make_blobs(2, {10, 10}, 2, 6.0, 2);
    LearnerSpec spec;
    spec.epochs = 1;
    spec.seed = 3;
    TrainTrace trace;
    const FittedModel m = fit(spec, train, val, &trace);
    CHECK(m.selected_epoch == 1);
    CHECK(trace.best_epoch == 1);
    REQUIRE(trace.per_sample_loss.size() == 1);
    CHECK(trace.per_sample_loss[0].size() == train.size());
    CHECK(trace.validation_accuracy.size() == 1);
}

TEST_CASE("full-batch softmax training decreases the loss monotonically") {
    // convex objective, small constant step: every epoch must improve
    Dataset train = make_blobs(3, {25, 25, 25}, 2, 5.0, 8);
    Eigen::MatrixXd x;
    std::vector<int> y;
    detail::to_matrix(train, x, y);

    LearnerSpec spec;
    spec.kind = LearnerKind::softmax_regression;
    spec.seed = 8;
    Network net(spec, 2, 3);
    double prev = net.loss(x, y, 0.0);
    for (int step = 0; step < 40; ++step) {
        auto [loss, grad] = net.loss_and_grad(x, y, 0.0);
        CHECK(loss <= prev + 1e-10);
        prev = loss;
        net.apply_gradient(grad, 0.05);
    }
    CHECK(net.loss(x, y, 0.0) < std::log(3.0));  // better than uniform guessing
}

TEST_CASE("fit is deterministic for a fixed spec") {
    Dataset train = make_blobs(3, {40, 40, 40}, 2, 4.0, 13);
    Dataset val = make_blobs(3, {15, 15, 15}, 2, 4.0, 14);
    LearnerSpec spec;
    spec.kind = LearnerKind::mlp;
    spec.hidden_sizes = {10};
    spec.epochs = 6;
    spec.seed = 21;
    const FittedModel a = fit(spec, train, val);
    const FittedModel b = fit(spec, train, val);
    CHECK(a.selected_epoch == b.selected_epoch);
    CHECK(a.validation_accuracy == b.validation_accuracy);
    CHECK(a.net.parameters() == b.net.parameters());
}

TEST_CASE("fit and predict_proba validate their inputs") {
    Dataset train = make_blobs(2, {10, 10}, 2, 6.0, 1);
    Dataset val3d = make_blobs(2, {5, 5}, 3, 6.0, 2);
    LearnerSpec spec;
    CHECK_THROWS_AS(fit(spec, train, val3d), InvalidArgument);

    LearnerSpec bad = spec;
    bad.epochs = 0;
    Dataset val = make_blobs(2, {5, 5}, 2, 6.0, 2);
    CHECK_THROWS_AS(fit(bad, train, val), InvalidArgument);
    bad = spec;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(fit(bad, train, val), InvalidArgument);

    const FittedModel m = fit(spec, train, val);
    CHECK_THROWS_AS(predict_proba(m, val3d), InvalidArgument);
    const auto probs = predict_proba(m, val);
    REQUIRE(probs.size() == val.size());
    for (const auto& row : probs) {
        REQUIRE(row.size() == 2);
        CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("regression data is rejected by fit") {
    Dataset reg = sample_regression_example(20, std::nullopt, 1.0, 4);
    CHECK_THROWS_AS(fit(LearnerSpec{}, reg, reg), InvalidArgument);
}
