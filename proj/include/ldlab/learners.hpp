#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ldlab/dataset.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/rng.hpp"

namespace ldlab {

enum class LearnerKind { softmax_regression, mlp };

struct LearnerSpec {
    LearnerKind kind = LearnerKind::softmax_regression;
    int epochs = 30;
    double learning_rate = 0.1;
    double lr_decay = 1.0;      // multiplied in every lr_decay_period epochs
    int lr_decay_period = 0;    // 0 disables the schedule
    std::vector<int> hidden_sizes = {16};  // mlp only
    int batch_size = 32;
    std::uint64_t seed = 0;
    double l2 = 0.0;

    void validate() const {
        if (epochs < 1) throw InvalidArgument("LearnerSpec: epochs must be >= 1");
        if (learning_rate <= 0.0) throw InvalidArgument("LearnerSpec: learning_rate must be > 0");
        if (batch_size < 1) throw InvalidArgument("LearnerSpec: batch_size must be >= 1");
        if (l2 < 0.0) throw InvalidArgument("LearnerSpec: l2 must be >= 0");
        if (kind == LearnerKind::mlp && hidden_sizes.empty())
            throw InvalidArgument("LearnerSpec: mlp needs at least one hidden layer");
    }
};

// Feed-forward classifier: zero or more tanh hidden layers and a softmax
// output. softmax_regression is the zero-hidden-layer case.
class Network {
  public:
    Network(const LearnerSpec& spec, int dim, int classes) : dim_(dim), classes_(classes) {
        std::vector<int> sizes;
        sizes.push_back(dim);
        if (spec.kind == LearnerKind::mlp)
            for (int h : spec.hidden_sizes) sizes.push_back(h);
        sizes.push_back(classes);

        Rng rng(derive_seed(spec.seed, 0xfeed));
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            Eigen::MatrixXd w = Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]);
            if (spec.kind == LearnerKind::mlp) {
                const double scale = 0.5 / std::sqrt(static_cast<double>(sizes[l]));
                for (int r = 0; r < w.rows(); ++r)
                    for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
            }
            weights_.push_back(std::move(w));
            biases_.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
        }
    }

    int dim() const { return dim_; }
    int classes() const { return classes_; }

    // Row-wise class probabilities for a batch (rows = samples).
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd h = x;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            h = (h * weights_[l].transpose()).rowwise() + biases_[l].transpose();
            if (l + 1 < weights_.size()) h = h.array().tanh();
        }
        return softmax_rows(h);
    }

    // Mean cross-entropy plus (l2/2)*sum ||W||^2 over weight matrices, with
    // the flattened analytic gradient.
    std::pair<double, std::vector<double>> loss_and_grad(const Eigen::MatrixXd& x,
                                                         const std::vector<int>& y,
                                                         double l2) const {
        const int n = static_cast<int>(x.rows());
        const std::size_t depth = weights_.size();
        std::vector<Eigen::MatrixXd> acts;  // layer inputs
        acts.push_back(x);
        Eigen::MatrixXd h = x;
        for (std::size_t l = 0; l < depth; ++l) {
            h = (h * weights_[l].transpose()).rowwise() + biases_[l].transpose();
            if (l + 1 < depth) {
                h = h.array().tanh();
                acts.push_back(h);
            }
        }
        Eigen::MatrixXd probs = softmax_rows(h);

        double loss = 0.0;
        for (int i = 0; i < n; ++i)
            loss -= std::log(std::max(probs(i, y[i]), 1e-300));
        loss /= n;
        for (const auto& w : weights_) loss += 0.5 * l2 * w.squaredNorm();

        // delta at the softmax layer: (p - onehot)/n
        Eigen::MatrixXd delta = probs;
        for (int i = 0; i < n; ++i) delta(i, y[i]) -= 1.0;
        delta /= n;

        std::vector<Eigen::MatrixXd> gw(depth);
        std::vector<Eigen::VectorXd> gb(depth);
        for (int l = static_cast<int>(depth) - 1; l >= 0; --l) {
            gw[l] = delta.transpose() * acts[l] + l2 * weights_[l];
            gb[l] = delta.colwise().sum();
            if (l > 0) {
                Eigen::MatrixXd back = delta * weights_[l];
                delta = back.array() * (1.0 - acts[l].array().square());
            }
        }
        std::vector<double> flat;
        flat.reserve(parameter_count());
        for (std::size_t l = 0; l < depth; ++l) {
            flat.insert(flat.end(), gw[l].data(), gw[l].data() + gw[l].size());
            flat.insert(flat.end(), gb[l].data(), gb[l].data() + gb[l].size());
        }
        return {loss, std::move(flat)};
    }

    double loss(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2) const {
        Eigen::MatrixXd probs = predict_proba(x);
        double loss = 0.0;
        for (int i = 0; i < static_cast<int>(x.rows()); ++i)
            loss -= std::log(std::max(probs(i, y[i]), 1e-300));
        loss /= static_cast<double>(x.rows());
        for (const auto& w : weights_) loss += 0.5 * l2 * w.squaredNorm();
        return loss;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l)
            n += static_cast<std::size_t>(weights_[l].size()) + biases_[l].size();
        return n;
    }

    std::vector<double> parameters() const {
        std::vector<double> flat;
        flat.reserve(parameter_count());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            flat.insert(flat.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
            flat.insert(flat.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
        }
        return flat;
    }

    void set_parameters(const std::vector<double>& flat) {
        std::size_t pos = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            std::copy(flat.begin() + pos, flat.begin() + pos + weights_[l].size(),
                      weights_[l].data());
            pos += weights_[l].size();
            std::copy(flat.begin() + pos, flat.begin() + pos + biases_[l].size(),
                      biases_[l].data());
            pos += biases_[l].size();
        }
    }

    void apply_gradient(const std::vector<double>& grad, double lr) {
        std::size_t pos = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (Eigen::Index i = 0; i < weights_[l].size(); ++i)
                weights_[l].data()[i] -= lr * grad[pos + i];
            pos += weights_[l].size();
            for (Eigen::Index i = 0; i < biases_[l].size(); ++i)
                biases_[l].data()[i] -= lr * grad[pos + i];
            pos += biases_[l].size();
        }
    }

  private:
    static Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
        for (int i = 0; i < logits.rows(); ++i) {
            Eigen::RowVectorXd row = logits.row(i);
            const double m = row.maxCoeff();
            row = (row.array() - m).exp();
            logits.row(i) = row / row.sum();
        }
        return logits;
    }

    int dim_;
    int classes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

struct FittedModel {
    Network net;
    int selected_epoch = 0;
    double validation_accuracy = 0.0;
};

// Per-epoch record of a full training run; used by the loss baselines.
struct TrainTrace {
    std::vector<std::vector<double>> per_sample_loss;  // [epoch][sample], plain CE
    std::vector<double> validation_accuracy;           // [epoch]
    int best_epoch = 0;                                // 1-based
};

namespace detail {

inline void to_matrix(const Dataset& d, Eigen::MatrixXd& x, std::vector<int>& y) {
    const int n = static_cast<int>(d.size());
    const int dim = d.dimension();
    x.resize(n, dim);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) x(i, j) = d.samples[i].features[j];
        y[i] = d.samples[i].label;
    }
}

inline double accuracy(const Network& net, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    Eigen::MatrixXd probs = net.predict_proba(x);
    int correct = 0;
    for (int i = 0; i < probs.rows(); ++i) {
        Eigen::Index argmax;
        probs.row(i).maxCoeff(&argmax);
        if (static_cast<int>(argmax) == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

inline std::vector<double> per_sample_ce(const Network& net, const Eigen::MatrixXd& x,
                                         const std::vector<int>& y) {
    Eigen::MatrixXd probs = net.predict_proba(x);
    std::vector<double> losses(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        losses[i] = -std::log(std::max(probs(static_cast<int>(i), y[i]), 1e-300));
    return losses;
}

}  // namespace detail

// Mini-batch gradient descent with validation-based epoch selection. The
// snapshot from the epoch with the highest validation accuracy is returned
// (earliest epoch on ties). Fully determined by (spec, data).
inline FittedModel fit(const LearnerSpec& spec, const Dataset& train, const Dataset& validation,
                       TrainTrace* trace = nullptr) {
    spec.validate();
    if (!train.is_classification() || !validation.is_classification())
        throw InvalidArgument("fit: classification datasets required");
    if (train.dimension() != validation.dimension() ||
        train.class_count != validation.class_count)
        throw InvalidArgument("fit: train/validation dimension or class count mismatch");
    for (const Sample& s : train.samples)
        if (s.label < 0 || s.label >= train.class_count)
            throw InvalidArgument("fit: label out of range");

    Eigen::MatrixXd xt, xv;
    std::vector<int> yt, yv;
    detail::to_matrix(train, xt, yt);
    detail::to_matrix(validation, xv, yv);

    Network net(spec, train.dimension(), train.class_count);
    Network best = net;
    int best_epoch = 0;
    double best_acc = -1.0;

    const int n = static_cast<int>(train.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        double lr = spec.learning_rate;
        if (spec.lr_decay_period > 0)
            lr *= std::pow(spec.lr_decay, (epoch - 1) / spec.lr_decay_period);

        Rng rng(derive_seed(spec.seed, 0x50f7, static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }

        for (int start = 0; start < n; start += spec.batch_size) {
            const int bsz = std::min(spec.batch_size, n - start);
            Eigen::MatrixXd xb(bsz, train.dimension());
            std::vector<int> yb(bsz);
            for (int i = 0; i < bsz; ++i) {
                xb.row(i) = xt.row(order[start + i]);
                yb[i] = yt[order[start + i]];
            }
            auto [loss, grad] = net.loss_and_grad(xb, yb, spec.l2);
            if (!std::isfinite(loss))
                throw TrainingDiverged("fit: training loss is non-finite", epoch);
            net.apply_gradient(grad, lr);
        }

        const double acc = detail::accuracy(net, xv, yv);
        if (trace) {
            trace->per_sample_loss.push_back(detail::per_sample_ce(net, xt, yt));
            trace->validation_accuracy.push_back(acc);
        }
        if (acc > best_acc) {
            best_acc = acc;
            best = net;
            best_epoch = epoch;
        }
    }

    if (trace) trace->best_epoch = best_epoch;
    return FittedModel{std::move(best), best_epoch, best_acc};
}

// One probability vector per sample; rows sum to 1 up to rounding.
inline std::vector<std::vector<double>> predict_proba(const FittedModel& model,
                                                      const Dataset& samples) {
    if (samples.dimension() != model.net.dim())
        throw InvalidArgument("predict_proba: dimension mismatch");
    Eigen::MatrixXd x;
    std::vector<int> y;
    detail::to_matrix(samples, x, y);
    Eigen::MatrixXd probs = model.net.predict_proba(x);
    std::vector<std::vector<double>> out(probs.rows());
    for (int i = 0; i < probs.rows(); ++i) {
        out[i].resize(probs.cols());
        for (int c = 0; c < probs.cols(); ++c) out[i][c] = probs(i, c);
    }
    return out;
}

}  // namespace ldlab
