#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "timostab/diagnostics.hpp"
#include "timostab/errors.hpp"
#include "timostab/timestepper.hpp"

using namespace timostab;
using testing_support::interval_system;
using testing_support::preset_state;

namespace {

double state_distance(const SimState& a, const SimState& b) {
  return std::max({(a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff(),
                   (a.du - b.du).cwiseAbs().maxCoeff(), (a.dv - b.dv).cwiseAbs().maxCoeff()});
}

StepControl with_dt(double dt) {
  StepControl c;
  c.dt = dt;
  return c;
}

}  // namespace

TEST_CASE("step control validation") {
  StepControl c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.newton_tol = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.newton_max = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("zero state is an equilibrium") {
  const auto sys = interval_system(11, 0.1, 0.1, saturating_law(1, 2), hardening_law(1, 3, 0.2));
  auto s = SimState::zero(11, 0.5);
  for (int k = 0; k < 5; ++k) s = step(sys, s, with_dt(0.05));
  CHECK(s.t == doctest::Approx(0.75));
  CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.dv.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one conservative step keeps the energy") {
  const auto sys = interval_system(3, 0.0, 0.0, zero_law(), zero_law(), false);
  auto s = SimState::zero(3);
  s.u << 0, 1, 2;
  s.v << 0, 1, -1;
  s.du << 0, 2, 1;
  s.dv << 0, -1, 3;
  const double E0 = energy(sys, s);
  const auto next = step(sys, s, with_dt(0.1));
  CHECK(std::abs(energy(sys, next) - E0) <= 1e-12 * E0);
  CHECK(next.u(0) == 0.0);
  CHECK(next.dv(0) == 0.0);
}

TEST_CASE("second order in time") {
  const auto sys = interval_system(21, 0.1, 0.1, identity_law(), identity_law());
  const auto s0 = preset_state(sys, "sine:1", "zero", "zero", "linear:-0.1");
  const auto ref = integrate(sys, s0, 0.5, with_dt(0.5 / 1600));
  std::vector<double> err;
  for (double dt : {0.5 / 25, 0.5 / 50, 0.5 / 100}) err.push_back(state_distance(integrate(sys, s0, 0.5, with_dt(dt)), ref));
  for (std::size_t k = 0; k + 1 < err.size(); ++k) CHECK(observed_order(err[k], err[k + 1]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("newton converges for every catalog law") {
  for (const auto& law : {identity_law(), saturating_law(1, 2), hardening_law(0.5, 4, 0.1), cubic_law(1, 1),
                          strauss_approximate(saturating_law(1, 2), 4).as_feedback_law()}) {
    const auto sys = interval_system(21, 0.1, 0.1, law, law);
    auto s = preset_state(sys, "sine:1", "quadratic:0.5", "linear:1", "linear:-1");
    TimeStepper stepper(sys, with_dt(0.02));
    for (int k = 0; k < 25; ++k) {
      s = stepper.step(s);
      CHECK(stepper.last_stats().residual <= 1e-10);
    }
    CHECK(std::isfinite(s.u.norm()));
  }
}

TEST_CASE("newton failure raises a step failure") {
  const auto sys = interval_system(11, 0.1, 0.1, saturating_law(1, 20), saturating_law(1, 20));
  auto s = preset_state(sys, "sine:1", "zero", "linear:3", "linear:-3");
  s.t = 0.25;
  StepControl c;
  c.dt = 0.5;
  c.newton_max = 1;
  c.fallback = false;
  try {
    (void)step(sys, s, c);
    FAIL("expected a step failure");
  } catch (const StepFailure& e) {
    CHECK(e.time() == 0.75);  // end of the attempted step
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("step counts") {
  CHECK(step_count(0.0, 1.0, 1e-3) == 1000);
  CHECK(step_count(0.3, 0.3, 0.1) == 0);
  CHECK(step_count(10.0, 20.0, 1e-3) == 10000);
  CHECK_THROWS_AS(step_count(0.0, 1.0, 0.3), InvalidArgument);
  CHECK_THROWS_AS(step_count(1.0, 0.5, 0.1), InvalidArgument);
}

TEST_CASE("integrate observers and trivial horizon") {
  const auto sys = interval_system(11, 0.1, 0.1, identity_law(), identity_law());
  const auto s0 = preset_state(sys, "sine:1", "zero", "zero", "linear:-0.1");
  std::vector<double> times;
  Observer obs = [&](const SimState& s) { times.push_back(s.t); };
  auto fin = integrate(sys, s0, 0.0, with_dt(0.01), {obs});
  CHECK(times.size() == 1);
  CHECK(state_distance(fin, s0) == 0.0);

  times.clear();
  fin = integrate(sys, s0, 0.1, with_dt(0.01), {obs});
  REQUIRE(times.size() == 11);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(times[k] == 0.01 * static_cast<double>(k));
  CHECK(fin.t == 0.1);
}

TEST_CASE("integration is deterministic") {
  const auto sys = interval_system(31, 0.1, 0.1, saturating_law(1, 2), identity_law());
  const auto s0 = preset_state(sys, "sine:1", "zero", "zero", "linear:-0.1");
  const auto a = integrate(sys, s0, 1.0, with_dt(0.01));
  const auto b = integrate(sys, s0, 1.0, with_dt(0.01));
  CHECK(state_distance(a, b) == 0.0);
}

TEST_CASE("checkpoint restart matches a straight run") {
  const auto sys = interval_system(21, 0.1, 0.1, saturating_law(1, 2), identity_law());
  const auto s0 = preset_state(sys, "sine:1", "zero", "zero", "linear:-0.1");
  const auto straight = integrate(sys, s0, 20.0, with_dt(0.01));
  const auto half = integrate(sys, s0, 10.0, with_dt(0.01));
  std::stringstream io;
  write_checkpoint(io, half, "abc123");
  const auto cp = read_checkpoint(io);
  CHECK(cp.config_hash == "abc123");
  CHECK(cp.state.t == 10.0);
  const auto resumed = integrate(sys, cp.state, 20.0, with_dt(0.01));
  CHECK(state_distance(resumed, straight) <= 1e-12);
}

TEST_CASE("checkpoint text round trip") {
  auto s = SimState::zero(3, 1.25);
  s.u << 0, 1.0 / 3.0, std::numeric_limits<double>::denorm_min();
  s.v << 0, -2.5e-300, 7.0;
  s.du << 0, 1e300, -0.1;
  s.dv << 0, 3.0, 0.2;
  std::stringstream io;
  write_checkpoint(io, s, "");
  std::string first;
  std::getline(io, first);
  CHECK(first == "# timostab checkpoint v1");
  io.seekg(0);
  const auto cp = read_checkpoint(io);
  CHECK(cp.config_hash.empty());
  CHECK(cp.state.t == 1.25);
  CHECK(state_distance(cp.state, s) == 0.0);
  CHECK(cp.state.u(2) == std::numeric_limits<double>::denorm_min());

  std::stringstream bad("# something else\n");
  CHECK_THROWS(read_checkpoint(bad));
  std::stringstream truncated("# timostab checkpoint v1\nt 0\nnodes 3\nconfig_hash -\n# u v du dv\n0 0 0 0\n");
  CHECK_THROWS(read_checkpoint(truncated));
}
