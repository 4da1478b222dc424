#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "timostab/discretization.hpp"

namespace timostab {

struct StepControl {
  double dt = 1e-3;
  double newton_tol = 1e-12;  // relative to the size of the boundary traces
  int newton_max = 50;
  bool fallback = true;       // fixed-point iteration when Newton stalls

  void validate() const;
};

struct StepStats {
  int newton_iterations = 0;
  int fallback_iterations = 0;
  double residual = 0.0;
  bool used_fallback = false;
};

/// Implicit midpoint scheme for the semi-discrete system. The unknowns are the
/// midpoint velocities; the linear part is eliminated through a cached sparse
/// factorization so Newton runs on the Gamma1 traces only.
class TimeStepper {
public:
  TimeStepper(const SemiDiscreteSystem& system, StepControl control);
  ~TimeStepper();
  TimeStepper(TimeStepper&&) noexcept;
  TimeStepper& operator=(TimeStepper&&) noexcept;

  SimState step(const SimState& state);

  const StepControl& control() const noexcept { return control_; }
  const StepStats& last_stats() const noexcept { return stats_; }
  const SemiDiscreteSystem& system() const noexcept { return *system_; }

private:
  struct Factorization;
  Factorization& factorization(double mu);
  void residual(const Factorization& f, double mu, const Vector& g, const Vector& s, Vector& phi, Vector& P) const;

  const SemiDiscreteSystem* system_;
  StepControl control_;
  StepStats stats_;
  std::unique_ptr<Factorization> cache_;
};

SimState step(const SemiDiscreteSystem& system, const SimState& state, const StepControl& control);

using Observer = std::function<void(const SimState&)>;

/// Number of uniform steps of size dt from t0 to T (T - t0 must be a multiple of dt).
long long step_count(double t0, double T, double dt);

/// Advances state0 to T. Every observer sees the initial state and the state
/// after each step. StepFailure propagates with its time stamp.
SimState integrate(const SemiDiscreteSystem& system, const SimState& state0, double T, const StepControl& control,
                   const std::vector<Observer>& observers = {});

struct Checkpoint {
  SimState state;
  std::string config_hash;
};

/// "# timostab checkpoint v1", then t, node count, config hash and one
/// "u v du dv" line per node, 17 significant digits.
void write_checkpoint(std::ostream& out, const SimState& state, const std::string& config_hash);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace timostab
