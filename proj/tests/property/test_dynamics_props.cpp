#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "timostab/diagnostics.hpp"
#include "timostab/timestepper.hpp"

using namespace timostab;
using testing_support::interval_system;

namespace {

SimState random_state(std::mt19937& rng, const SemiDiscreteSystem& sys, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  auto s = SimState::zero(sys.mesh().node_count());
  for (int k : sys.free_nodes()) {
    s.u(k) = g(rng);
    s.v(k) = g(rng);
    s.du(k) = g(rng);
    s.dv(k) = g(rng);
  }
  return s;
}

StepControl with_dt(double dt) {
  StepControl c;
  c.dt = dt;
  return c;
}

SemiDiscreteSystem rect(int cells, double a1, double a2, const FeedbackLaw& law, bool sigma,
                        const CoefficientSchedule& sched = CoefficientSchedule::constant(1.0)) {
  const auto mesh = build_rect_mesh(1, 1, cells, cells);
  const auto part = classify_boundary(mesh, Point(-0.1, -0.1));
  return assemble(mesh, part, a1, a2, sched, law, law, sigma ? sigma_from_mesh(mesh, part, a2) : zero_sigma(mesh, part));
}

}  // namespace

TEST_CASE("decoupled conservative runs keep their energy") {
  std::mt19937 rng(53);
  for (int trial = 0; trial < 4; ++trial) {
    const auto sys = trial % 2 ? rect(4, 0.0, 0.0, zero_law(), false)
                               : interval_system(17, 0.0, 0.0, zero_law(), zero_law(), false);
    auto s = random_state(rng, sys);
    const double E0 = energy(sys, s);
    TimeStepper stepper(sys, with_dt(0.05));
    for (int k = 0; k < 200; ++k) s = stepper.step(s);
    CHECK(std::abs(energy(sys, s) - E0) <= 1e-12 * E0);
  }
}

TEST_CASE("coupled runs without feedback keep E + F") {
  std::mt19937 rng(59);
  for (int trial = 0; trial < 4; ++trial) {
    const auto sys = trial % 2 ? rect(4, 0.1, 0.2, zero_law(), true)
                               : interval_system(17, 0.1, 0.2, zero_law(), zero_law(), true);
    auto s = random_state(rng, sys);
    const double L0 = energy(sys, s) + functional_F(sys, s);
    TimeStepper stepper(sys, with_dt(0.02));
    for (int k = 0; k < 200; ++k) s = stepper.step(s);
    CHECK(std::abs(energy(sys, s) + functional_F(sys, s) - L0) <= 1e-11 * std::abs(L0));
  }
}

TEST_CASE("feedback never creates energy") {
  std::mt19937 rng(61);
  for (const auto& law : {identity_law(), saturating_law(1, 2), hardening_law(0.5, 3, 0.3),
                          strauss_approximate(saturating_law(1, 2), 3).as_feedback_law()}) {
    const auto sys = interval_system(21, 0.1, 0.1, law, law, true);
    auto s = random_state(rng, sys);
    TimeStepper stepper(sys, with_dt(0.01));
    double prev = energy(sys, s) + functional_F(sys, s);
    for (int k = 0; k < 300; ++k) {
      s = stepper.step(s);
      const double cur = energy(sys, s) + functional_F(sys, s);
      CHECK(cur <= prev + 1e-12 * std::abs(prev));
      prev = cur;
    }
  }
}

TEST_CASE("decaying coefficient: the E + F increase shrinks with dt") {
  // mu' <= 0 only removes energy in the continuum; the discrete excess is O(dt).
  std::mt19937 rng(67);
  const auto sched = CoefficientSchedule::decaying(2.0, 1.0, 1.0);
  const auto sys = interval_system(21, 0.1, 0.1, saturating_law(1, 2), identity_law(), true, 0.0, 1.0, sched);
  const auto s0 = random_state(rng, sys, 0.3);
  double prev_excess = 1e300;
  for (double dt : {0.02, 0.01, 0.005}) {
    auto s = s0;
    TimeStepper stepper(sys, with_dt(dt));
    double excess = 0.0, prev = energy(sys, s) + functional_F(sys, s);
    for (int k = 0; k < static_cast<int>(std::lround(1.0 / dt)); ++k) {
      s = stepper.step(s);
      const double cur = energy(sys, s) + functional_F(sys, s);
      excess = std::max(excess, (cur - prev) / dt);
      prev = cur;
    }
    CHECK(excess <= std::max(0.6 * prev_excess, 1e-10));
    prev_excess = excess;
  }
}

TEST_CASE("newton converges over the law catalog below the documented dt") {
  std::mt19937 rng(71);
  for (const auto& law : {identity_law(), saturating_law(1, 2), saturating_law(0.2, 5), hardening_law(1, 4, 0.05),
                          cubic_law(1, 2)}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto sys = rect(4, 0.1, 0.1, law, true);
      auto s = random_state(rng, sys, 2.0);
      TimeStepper stepper(sys, with_dt(0.01));
      for (int k = 0; k < 20; ++k) {
        CHECK_NOTHROW(s = stepper.step(s));
        CHECK_FALSE(stepper.last_stats().used_fallback);
      }
    }
  }
}

TEST_CASE("dissipation dominates the weighted trace") {
  std::mt19937 rng(73);
  const auto sched = CoefficientSchedule::decaying(3.0, 1.5, 0.2);
  for (const auto& law : {identity_law(), saturating_law(1, 2), hardening_law(0.5, 3, 0.3)}) {
    const auto sys = interval_system(9, 0.1, 0.05, law, law, true, -0.4, 1.0, sched);
    for (int trial = 0; trial < 50; ++trial) {
      auto s = random_state(rng, sys, 3.0);
      s.t = 10.0 * trial;
      const auto d = boundary_dissipation(sys, s);
      CHECK(d.D_u >= sched.mu0 * law.b() * d.trace_u * (1 - 1e-14));
      CHECK(d.D_v >= sys.energy_weight() * law.b() * d.trace_v * (1 - 1e-14));
    }
  }
}

TEST_CASE("F and G bounds hold on arbitrary discrete states") {
  std::mt19937 rng(79);
  for (int dim : {1, 2}) {
    const double a1 = 0.08, a2 = 0.1;
    const auto sys = dim == 1 ? interval_system(15, a1, a2, identity_law(), identity_law(), true)
                              : rect(5, a1, a2, identity_law(), true);
    const auto emb = embedding_constants(sys.mesh(), sys.partition());
    const auto shape = geometric_constants(sys.mesh(), sys.partition());
    const double A = compute_A(dim, emb.M, shape.R, 1.0, a1 / a2);
    const double Fc = 2.0 * std::sqrt(a1 * a2 * dim) * emb.M;
    const double eps1 = 1.0 / (4.0 * A);
    for (int trial = 0; trial < 200; ++trial) {
      const auto s = random_state(rng, sys);
      const double E = energy(sys, s), F = functional_F(sys, s), G = functional_G(sys, s);
      const auto m = sandwich_check(E, F, G, eps1, A, a1, a2, dim, emb.M, 1.0);
      CHECK(m.F >= -1e-12 * E);
      CHECK(m.G >= -1e-12 * E);
      // admissible alphas also give the sandwich
      CHECK(m.lower >= -1e-12 * E);
      CHECK(m.upper >= -1e-12 * E);
    }
  }
}
