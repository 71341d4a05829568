#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phsid {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions between model blocks, signals or trajectories.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A structured-matrix or model invariant does not hold (skewness, symmetry,
/// definiteness, grid consistency).
class InvariantError : public Error {
 public:
  InvariantError(std::string invariant, const std::string& detail)
      : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// A model could not be built from the given blocks.
class InvalidModelError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (JSON, CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared while time stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// The implicit step matrix of the discrete-gradient scheme is singular.
class SingularStepError : public Error {
 public:
  using Error::Error;
};

/// A tangent direction mixes several blocks; sensitivities are only defined
/// for pure directions.
class UnsupportedDirectionError : public Error {
 public:
  using Error::Error;
};

/// Armijo backtracking exhausted its halving budget.
class LineSearchError : public Error {
 public:
  LineSearchError(double last_sigma, const std::string& what)
      : Error(what), last_sigma_(last_sigma) {}

  double last_sigma() const noexcept { return last_sigma_; }

 private:
  double last_sigma_;
};

}  // namespace phsid
