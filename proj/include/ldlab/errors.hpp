#pragma once

#include <stdexcept>
#include <string>

namespace ldlab {

// Bad arguments or configuration supplied by the caller.
class InvalidArgument : public std::invalid_argument {
  public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// An operation was applied to data it does not support (e.g. label noise on a
// regression dataset).
class Unsupported : public std::runtime_error {
  public:
    explicit Unsupported(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
  public:
    TrainingDiverged(const std::string& msg, int epoch)
        : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

// A proposition's hypotheses cannot be satisfied on the given sweep.
class PreconditionError : public std::runtime_error {
  public:
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Correlation is undefined (constant input).
class UndefinedCorrelation : public std::runtime_error {
  public:
    explicit UndefinedCorrelation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ldlab
