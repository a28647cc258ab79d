#pragma once

#include <stdexcept>
#include <string>

namespace tumor {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: parameters, config files, ill-posed problem setups.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to converge or produced non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  explicit NumericalError(const std::string& what) : Error(what) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Degenerate geometry (too few points, zero-length curves, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A model state outside the validity range of the model.
class InfeasibleState : public Error {
 public:
  using Error::Error;
};

/// The reduced radial model has no stationary state in (0, 1).
class NoEquilibrium : public Error {
 public:
  using Error::Error;
};

/// Internal invariant violated. Indicates a bug, never bad input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace tumor
