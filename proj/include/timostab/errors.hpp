#pragma once

#include <stdexcept>
#include <string>

namespace timostab {

/// Raised when an operation's preconditions on its arguments are violated.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Boundary split leaves Gamma0 or Gamma1 empty, or a face straddles the split.
class InadmissiblePartition : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Iterative linear algebra that did not converge within its cap.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Nonlinear solve inside a time step failed.
class StepFailure : public std::runtime_error {
public:
  StepFailure(const std::string& what, double time, double residual)
      : std::runtime_error(what), time_(time), residual_(residual) {}

  double time() const noexcept { return time_; }
  double residual() const noexcept { return residual_; }

private:
  double time_;
  double residual_;
};

/// Log-linear fit requested over a window containing non-positive energy.
class FitUndefined : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace timostab
