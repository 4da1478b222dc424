#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "timostab/discretization.hpp"
#include "timostab/fields.hpp"
#include "timostab/timestepper.hpp"

namespace timostab {

/// E = 1/2 [ |du|_M^2 + r |dv|_M^2 + mu(t) <u,Ku> + r <v,Kv> ], r = energy_weight().
double energy(const SemiDiscreteSystem& system, const SimState& state);

/// F = alpha1 <u, C v>.
double functional_F(const SemiDiscreteSystem& system, const SimState& state);

/// G = (n-1)[(du,u) + (dv,v)] + 2 (du, m.grad u) + 2 (dv, m.grad v), m = x - x0,
/// integrated elementwise from the discrete fields.
double functional_G(const SemiDiscreteSystem& system, const SimState& state, const Point& x0);
double functional_G(const SemiDiscreteSystem& system, const SimState& state);

double lyapunov(const SemiDiscreteSystem& system, const SimState& state, double eps);

/// Slacks (>= 0 when the bound holds) of
///   E/2 <= L,  L <= 3E/2,  |G| <= A E,  |F| <= 2 sqrt(a1 a2 n / mu0) M E
/// with L = E + F + eps1 G.
struct SandwichMargins {
  double lower = 0.0;
  double upper = 0.0;
  double G = 0.0;
  double F = 0.0;
};
SandwichMargins sandwich_check(double E, double F, double G, double eps1, double A, double alpha1, double alpha2,
                               int n, double M, double mu0);

/// D_u = mu(t) sum_q omega_q p1(s_q) s_q,  D_v = r sum_q omega_q p2(s_q) s_q over Gamma1
/// quadrature, s the velocity traces. Also the plain weighted trace norms
/// sum_q omega_q s_q^2 for both velocities.
struct Dissipation {
  double D_u = 0.0;
  double D_v = 0.0;
  double trace_u = 0.0;
  double trace_v = 0.0;
};
Dissipation boundary_dissipation(const SemiDiscreteSystem& system, const SimState& state);

/// E* = 1/2 |ddu|_M^2 + 1/2 |ddv|_M^2 + mu/2 <du,K du> + 1/2 <dv,K dv>.
double higher_energy(const SemiDiscreteSystem& system, const SimState& state);

/// Bound on E*(0) from the initial fields:
///   a1 = mu(0) |lap u0| + alpha1 |sum d v0|,  a2 = |lap v0| + alpha2 |sum d u0|,
///   a3 = a1^2/2 + a2^2/2 + mu(0)/2 |grad u1|^2 + 1/2 |grad v1|^2.
struct HigherEnergyBound {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};
HigherEnergyBound initial_higher_energy_bound(const SemiDiscreteSystem& system, const AnalyticField& u0,
                                              const AnalyticField& v0, const AnalyticField& u1,
                                              const AnalyticField& v1);

/// Multiplier identity for a manufactured field u with m = x - x0:
///   standard:  2 (lap u, m.grad u) = (n-2)|grad u|^2 - int (m.nu)|grad u|^2 + 2 int d_nu u (m.grad u)
///   printed:   (lap u, m.grad u)   = same right side.
/// Volume terms use the gradient of the nodal interpolant, boundary terms the
/// analytic field, so the mismatch measures the discretization error.
struct RellichResult {
  double lhs_standard = 0.0;
  double lhs_printed = 0.0;
  double rhs = 0.0;
  double mismatch_standard = 0.0;
  double mismatch_printed = 0.0;
};
RellichResult rellich_check(const Mesh& mesh, const AnalyticField& u, const Point& x0);

struct TraceSample {
  double t = 0.0;
  double E = 0.0;
  double F = 0.0;
  double G = 0.0;
  double lyapunov = 0.0;
  double D_u = 0.0;
  double D_v = 0.0;
  double E_star = 0.0;
  double envelope = 0.0;
  double slack_sandwich_lo = 0.0;
  double slack_sandwich_hi = 0.0;
  double slack_G = 0.0;
  double slack_F = 0.0;
  // not part of the CSV
  double power_mu = 0.0;  // mu'(t)/2 <u,Ku>
  double trace_u = 0.0;
  double trace_v = 0.0;
};

/// Constants the bound columns depend on. Unset optionals leave the matching
/// columns as NaN.
struct TraceContext {
  double eps = 0.0;               // weight of G in the lyapunov column
  std::optional<double> eta;      // envelope rate
  std::optional<double> A;        // |G| <= A E
  std::optional<double> F_coeff;  // |F| <= F_coeff E
  bool higher_energy = true;
};

struct TraceMetadata {
  std::string config_hash;
  std::optional<double> eta;
  std::optional<double> eps1;
  std::optional<double> eps2;
  std::optional<double> A;
  std::optional<double> S1;
  std::optional<double> S2;
  double E0 = 0.0;
  double compat_residual = 0.0;
  double dt = 0.0;
};

struct EnergyTrace {
  TraceMetadata meta;
  std::vector<TraceSample> samples;

  /// Comment lines starting with '#', the header row, then one row per sample.
  void write_csv(std::ostream& out) const;
};

EnergyTrace read_trace_csv(std::istream& in);

/// Observer that appends one sample per visited state.
class TraceRecorder {
public:
  TraceRecorder(const SemiDiscreteSystem& system, TraceContext context, EnergyTrace& trace);
  void operator()(const SimState& state);

private:
  const SemiDiscreteSystem* system_;
  TraceContext context_;
  EnergyTrace* trace_;
};

TraceSample make_sample(const SemiDiscreteSystem& system, const SimState& state, const TraceContext& context,
                        double E0);

struct RunResult {
  EnergyTrace trace;
  SimState final_state;
};

RunResult run_with_trace(const SemiDiscreteSystem& system, const SimState& state0, double T,
                         const StepControl& control, const TraceContext& context);

/// residual_k = [(E+F)_{k+1} - (E+F)_k]/dt - trapezoid average of (mu'/2 <u,Ku> - D_u - D_v).
std::vector<double> energy_balance_residual(const EnergyTrace& trace);
double max_abs(const std::vector<double>& values);

/// log2 ratio of successive errors for refinement factor `ratio`.
double observed_order(double coarse_error, double fine_error, double ratio = 2.0);

/// max_k { [L_{k+1} - L_k]/dt + eps2 E_k }; <= 0 means the discrete decay holds.
double lyapunov_decay_excess(const EnergyTrace& trace, double eps2);
/// max_k { [G_{k+1} - G_k]/dt + E - S1 trace_u - S2 trace_v } with trapezoid averages.
double dG_bound_excess(const EnergyTrace& trace, double S1, double S2);

struct MonitorSummary {
  long long envelope = 0;
  long long sandwich_lo = 0;
  long long sandwich_hi = 0;
  long long G = 0;
  long long F = 0;
  long long total() const { return envelope + sandwich_lo + sandwich_hi + G + F; }
};

/// Counts samples violating the bound columns (NaN columns are skipped):
/// E <= envelope (1 + 1e-9), sandwich slacks >= -1e-12 E, G and F slacks >= -1e-12.
MonitorSummary count_violations(const EnergyTrace& trace);

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};

/// Least-squares line through (t, ln E) for samples with t in [t_a, t_b].
DecayFit fit_decay_rate(const EnergyTrace& trace, double t_a, double t_b);
/// Window [0.2 T, T] with T the last sample time.
DecayFit fit_decay_rate(const EnergyTrace& trace);

/// SVG line plot of E and the envelope (log scale) against t.
void write_svg_plot(std::ostream& out, const EnergyTrace& trace);

}  // namespace timostab
