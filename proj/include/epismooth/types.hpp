#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace epismooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Everything derives from std::runtime_error so callers that
// only care about "it failed" can catch one type.

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: dimension mismatch, non-positive smoothing parameter, etc.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// An operation was called outside its domain of validity.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// The requested construction is not representable by this library.
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

/// A supremum is +inf.
class UnboundedError : public Error {
  public:
    using Error::Error;
};

/// Iterative routine hit its cap. Carries the best iterate seen so far.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, Vector best, double residual)
        : Error(what), best_(std::move(best)), residual_(residual) {}

    const Vector& best() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

  private:
    Vector best_;
    double residual_;
};

/// Function evaluation outside the domain of a primitive (log of a negative, ...).
class EvaluationError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw ArgumentError(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                            ", expected " + std::to_string(want) + ")");
    }
}

inline void require_positive_mu(double mu, const char* what) {
    if (!(mu > 0.0)) {
        throw ArgumentError(std::string(what) + ": smoothing parameter must be positive");
    }
}

} // namespace detail

} // namespace epismooth
