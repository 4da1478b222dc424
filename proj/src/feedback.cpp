#include "timostab/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "timostab/errors.hpp"

namespace timostab {

FeedbackLaw::FeedbackLaw(std::string label, Function value, Function slope, double b, double L)
    : label_(std::move(label)), value_(std::move(value)), slope_(std::move(slope)), b_(b), L_(L) {
  if (!value_ || !slope_) throw InvalidArgument("feedback law needs value and slope functions");
  if (b_ < 0.0 || std::isnan(b_) || std::isnan(L_)) throw InvalidArgument("feedback law constants must be >= 0");
}

bool FeedbackLaw::certified() const noexcept { return b_ > 0.0 && std::isfinite(L_) && L_ >= b_; }

FeedbackLaw identity_law(double k) {
  if (!(k > 0.0)) throw InvalidArgument("identity law slope must be positive");
  return FeedbackLaw(
      "identity", [k](double s) { return k * s; }, [k](double) { return k; }, k, k);
}

FeedbackLaw saturating_law(double b, double L) {
  if (!(b > 0.0) || !(L >= b)) throw InvalidArgument("saturating law needs 0 < b <= L");
  return FeedbackLaw(
      "saturating", [b, L](double s) { return b * s + (L - b) * std::tanh(s); },
      [b, L](double s) {
        const double c = std::cosh(s);
        return b + (L - b) / (c * c);
      },
      b, L);
}

FeedbackLaw hardening_law(double b, double L, double knee) {
  if (!(b > 0.0) || !(L >= b) || !(knee > 0.0)) throw InvalidArgument("hardening law needs 0 < b <= L and knee > 0");
  return FeedbackLaw(
      "hardening",
      [b, L, knee](double s) {
        const double a = std::abs(s);
        const double mag = a <= knee ? b * a : b * knee + L * (a - knee);
        return std::copysign(mag, s);
      },
      [b, L, knee](double s) { return (s >= knee || s < -knee) ? L : b; }, b, L);
}

FeedbackLaw zero_law() {
  return FeedbackLaw(
      "zero", [](double) { return 0.0; }, [](double) { return 0.0; }, 0.0, 0.0);
}

FeedbackLaw cubic_law(double b, double c) {
  if (!(b > 0.0) || !(c >= 0.0)) throw InvalidArgument("cubic law needs b > 0 and c >= 0");
  return FeedbackLaw(
      "cubic", [b, c](double s) { return b * s + c * s * s * s; }, [b, c](double s) { return b + 3.0 * c * s * s; },
      b, std::numeric_limits<double>::infinity());
}

FeedbackLaw make_law(const LawSpec& spec) {
  auto base = [&]() -> FeedbackLaw {
    if (spec.kind == "identity") return identity_law(spec.k);
    if (spec.kind == "saturating") return saturating_law(spec.b, spec.L);
    if (spec.kind == "hardening") return hardening_law(spec.b, spec.L, spec.knee);
    if (spec.kind == "zero") return zero_law();
    if (spec.kind == "cubic") return cubic_law(spec.b, spec.c);
    throw InvalidArgument("unknown feedback law '" + spec.kind + "'");
  }();
  if (spec.strauss_level < 0) throw InvalidArgument("strauss_level must be >= 0");
  if (spec.strauss_level == 0) return base;
  return strauss_approximate(base, spec.strauss_level).as_feedback_law();
}

LipschitzLaw::LipschitzLaw(std::string label, int level, double b, std::vector<double> breakpoints,
                           std::vector<double> values)
    : label_(std::move(label)), level_(level), b_(b), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() < 2 || breakpoints_.size() != values_.size())
    throw InvalidArgument("Lipschitz law needs matching breakpoints and values (at least two)");
  slopes_.resize(breakpoints_.size() - 1);
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    const double dx = breakpoints_[i + 1] - breakpoints_[i];
    if (!(dx > 0.0)) throw InvalidArgument("Lipschitz law breakpoints must increase strictly");
    slopes_[i] = (values_[i + 1] - values_[i]) / dx;
    lipschitz_ = std::max(lipschitz_, std::abs(slopes_[i]));
  }
}

std::size_t LipschitzLaw::segment(double s) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
  const auto idx = static_cast<std::ptrdiff_t>(it - breakpoints_.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(slopes_.size()) - 1));
}

double LipschitzLaw::operator()(double s) const {
  const auto i = segment(s);
  return values_[i] + slopes_[i] * (s - breakpoints_[i]);
}

double LipschitzLaw::slope(double s) const { return slopes_[segment(s)]; }

FeedbackLaw LipschitzLaw::as_feedback_law() const {
  auto self = std::make_shared<const LipschitzLaw>(*this);
  return FeedbackLaw(
      label_ + "@l=" + std::to_string(level_), [self](double s) { return (*self)(s); },
      [self](double s) { return self->slope(s); }, b_, lipschitz_);
}

void LipschitzLaw::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "breakpoint,value\n";
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) out << breakpoints_[i] << ',' << values_[i] << '\n';
  out.precision(old);
}

LipschitzLaw strauss_approximate(const FeedbackLaw& law, int level) {
  if (level < 1) throw InvalidArgument("approximation level must be >= 1");
  const long long l = level;
  const long long kmax = l * l;
  std::vector<double> bp;
  std::vector<double> vals;
  bp.reserve(static_cast<std::size_t>(2 * kmax + 1));
  for (long long k = -kmax; k <= kmax; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(l);
    bp.push_back(s);
    vals.push_back(k == 0 ? 0.0 : law(s));
  }
  return LipschitzLaw(law.label(), level, law.b(), std::move(bp), std::move(vals));
}

LawReport verify_law(const FeedbackLaw& law, double S, int samples) {
  if (!(S > 0.0)) throw InvalidArgument("verify_law: range must be positive");
  if (samples < 2) throw InvalidArgument("verify_law: need at least 2 samples");
  std::vector<double> s(static_cast<std::size_t>(samples));
  std::vector<double> p(s.size());
  for (int i = 0; i < samples; ++i) {
    s[i] = -S + 2.0 * S * i / (samples - 1);
    p[i] = law(s[i]);
  }
  LawReport r;
  r.value_at_zero = law(0.0);
  r.monotonicity_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double q = (p[j] - p[i]) / (s[j] - s[i]) - law.b();
      if (q < r.monotonicity_margin) {
        r.monotonicity_margin = q;
        r.monotone_worst_s = s[j];
        r.monotone_worst_r = s[i];
      }
    }
  }
  r.growth_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double g = law.L() * std::abs(s[i]) - std::abs(p[i]);
    if (g < r.growth_margin) {
      r.growth_margin = g;
      r.growth_worst_s = s[i];
    }
  }
  const double scale = std::max(1.0, std::max(std::abs(law.b()), std::isfinite(law.L()) ? law.L() : 1.0) * S);
  const double tol = 1e-12 * scale;
  r.passed = std::abs(r.value_at_zero) <= tol && r.monotonicity_margin >= -1e-12 * std::max(1.0, law.b()) &&
             r.growth_margin >= -tol;
  return r;
}

LawReport verify_law(const LipschitzLaw& law, double S, int samples) {
  return verify_law(law.as_feedback_law(), S, samples);
}

double evaluate_h(const FeedbackLaw& law, const BoundaryPartition& partition, std::size_t face, std::size_t qp,
                  double s) {
  if (!partition.on_gamma1(face)) throw InvalidArgument("feedback acts on Gamma1 faces only");
  return partition.m_dot_nu.at(face).at(qp) * law(s);
}

}  // namespace timostab
