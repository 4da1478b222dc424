#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "timostab/geometry.hpp"

namespace timostab {

/// Scalar boundary feedback p with its strong-monotonicity constant b and
/// linear-growth constant L:
///   p(0) = 0,  [p(s) - p(r)](s - r) >= b (s - r)^2,  |p(s)| <= L |s|.
/// `slope` is the right derivative, used by the Newton linearization.
/// Laws with b <= 0 or infinite L can be simulated but are not certified for
/// a decay rate.
class FeedbackLaw {
public:
  using Function = std::function<double(double)>;

  FeedbackLaw(std::string label, Function value, Function slope, double b, double L);

  double operator()(double s) const { return value_(s); }
  double slope(double s) const { return slope_(s); }
  double b() const noexcept { return b_; }
  double L() const noexcept { return L_; }
  const std::string& label() const noexcept { return label_; }

  /// True when the constants support the decay estimate (b > 0, finite L >= b).
  bool certified() const noexcept;

private:
  std::string label_;
  Function value_;
  Function slope_;
  double b_;
  double L_;
};

FeedbackLaw identity_law(double k = 1.0);
/// s -> b s + (L - b) tanh(s)
FeedbackLaw saturating_law(double b, double L);
/// slope b on [-knee, knee], slope L outside
FeedbackLaw hardening_law(double b, double L, double knee);
/// p = 0; only meaningful for conservative (non-dissipative) runs.
FeedbackLaw zero_law();
/// s -> b s + c s^3: strongly monotone without linear growth.
FeedbackLaw cubic_law(double b, double c);

struct LawSpec {
  std::string kind = "identity";  // identity | saturating | hardening | zero | cubic
  double k = 1.0;
  double b = 1.0;
  double L = 2.0;
  double knee = 1.0;
  double c = 1.0;
  int strauss_level = 0;          // > 0 replaces the law by its Lipschitz approximant
};

FeedbackLaw make_law(const LawSpec& spec);

/// Piecewise-linear interpolant of a law on the grid {k/l : |k/l| <= l},
/// continued beyond +-l with the terminal slopes.
class LipschitzLaw {
public:
  LipschitzLaw(std::string label, int level, double b, std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double s) const;
  double slope(double s) const;

  int level() const noexcept { return level_; }
  double b() const noexcept { return b_; }
  double lipschitz() const noexcept { return lipschitz_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }

  FeedbackLaw as_feedback_law() const;

  /// CSV of (breakpoint, value).
  void write_csv(std::ostream& out) const;

private:
  std::size_t segment(double s) const;

  std::string label_;
  int level_;
  double b_;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  double lipschitz_ = 0.0;
};

LipschitzLaw strauss_approximate(const FeedbackLaw& law, int level);

struct LawReport {
  bool passed = false;
  double value_at_zero = 0.0;
  /// min over sample pairs of the difference quotient minus b
  double monotonicity_margin = 0.0;
  double monotone_worst_s = 0.0;
  double monotone_worst_r = 0.0;
  /// min over samples of L|s| - |p(s)|
  double growth_margin = 0.0;
  double growth_worst_s = 0.0;
};

/// Scans `samples` evenly spaced points of [-S, S] (all pairs for monotonicity).
LawReport verify_law(const FeedbackLaw& law, double S, int samples);
LawReport verify_law(const LipschitzLaw& law, double S, int samples);

/// h(x, s) = [m.nu](x) p(s) at a Gamma1 boundary quadrature point.
double evaluate_h(const FeedbackLaw& law, const BoundaryPartition& partition, std::size_t face, std::size_t qp,
                  double s);

}  // namespace timostab
