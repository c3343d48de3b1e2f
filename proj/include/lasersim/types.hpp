#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lasersim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed parameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operator or state dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Base class of numerical aborts (CLI exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Probability mass left the retained Fock levels; increase n_max.
class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Trace, hermiticity or positivity of a sampled state broke tolerance.
class InvariantError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Too much negative spectral mass to discard.
class PositivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Trajectory became non-finite or hit a coordinate singularity.
class SingularTrajectoryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An iterative procedure did not reach its stopping criterion.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lasersim
