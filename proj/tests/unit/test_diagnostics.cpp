#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles/oracles.hpp"
#include "support.hpp"
#include "timostab/diagnostics.hpp"
#include "timostab/errors.hpp"

using namespace timostab;
using testing_support::interval_system;
using testing_support::preset_state;
using testing_support::rect_system;

namespace {

SimState hand_state(std::size_t nodes = 3) {
  auto s = SimState::zero(nodes);
  s.u << 0, 1, 2;
  s.v << 0, 1, -1;
  s.du << 0, 2, 1;
  s.dv << 0, -1, 3;
  return s;
}

AnalyticField field(const char* text, int n = 1) { return make_preset(parse_preset(text), n, 1.0, 1.0); }

EnergyTrace synthetic(double E0, double rate, double dt, int count) {
  EnergyTrace tr;
  tr.meta.dt = dt;
  for (int k = 0; k < count; ++k) {
    TraceSample s;
    s.t = k * dt;
    s.E = E0 * std::exp(-rate * s.t);
    tr.samples.push_back(s);
  }
  return tr;
}

StepControl with_dt(double dt) {
  StepControl c;
  c.dt = dt;
  return c;
}

}  // namespace

TEST_CASE("energy") {
  const auto sys = interval_system(3, 0.1, 0.1, identity_law(), identity_law());
  CHECK(energy(sys, SimState::zero(3)) == 0.0);
  CHECK(energy(sys, hand_state()) == doctest::Approx(oracle::kEnergy3).epsilon(1e-14));

  const auto sq = rect_system(3, 0.1, 0.1, identity_law(), identity_law());
  auto s = SimState::zero(sq.mesh().node_count());
  s.du.setOnes();
  CHECK(energy(sq, s) == doctest::Approx(0.5).epsilon(1e-14));

  // rotation terms weighted by alpha1/alpha2
  const auto w = interval_system(3, 0.05, 0.1, identity_law(), identity_law());
  auto t = SimState::zero(3);
  t.dv.setOnes();
  CHECK(energy(w, t) == doctest::Approx(0.5 * 0.5).epsilon(1e-14));
  // alpha = 0 falls back to weight 1
  CHECK(interval_system(3, 0.0, 0.0, zero_law(), zero_law(), false).energy_weight() == 1.0);
}

TEST_CASE("functional F") {
  const auto sys = interval_system(3, 0.1, 0.1, identity_law(), identity_law());
  CHECK(functional_F(sys, hand_state()) == doctest::Approx(oracle::kF3).epsilon(1e-14));
  auto s = hand_state();
  s.v.setConstant(0.7);
  CHECK(std::abs(functional_F(sys, s)) <= 1e-15);
  s = hand_state();
  s.u.setZero();
  CHECK(functional_F(sys, s) == 0.0);
}

TEST_CASE("functional G") {
  const auto sys = interval_system(3, 0.1, 0.1, identity_law(), identity_law());
  CHECK(functional_G(sys, hand_state()) == doctest::Approx(oracle::kG3).epsilon(1e-14));
  auto s = hand_state();
  s.du.setZero();
  s.dv.setZero();
  CHECK(functional_G(sys, s) == 0.0);

  const auto fine = interval_system(11, 0.1, 0.1, identity_law(), identity_law());
  s = SimState::zero(11);
  s.u = interpolate(fine, field("linear:1"));
  s.du.setOnes();
  CHECK(functional_G(fine, s, Point(0, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  // moving x0 to -1 adds 2 int u' du = 2
  CHECK(functional_G(fine, s, Point(-1, 0)) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("functional G in 2D includes the (n-1) terms") {
  const auto sq = rect_system(2, 0.1, 0.1, identity_law(), identity_law());
  auto s = SimState::zero(sq.mesh().node_count());
  s.u.setOnes();
  s.du.setOnes();
  // grad u = 0 so only (du, u) survives: |Omega| = 1
  CHECK(functional_G(sq, s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lyapunov and sandwich") {
  const auto sys = interval_system(3, 0.1, 0.1, identity_law(), identity_law());
  const auto s = hand_state();
  CHECK(lyapunov(sys, s, 0.0) == doctest::Approx(oracle::kEnergy3 + oracle::kF3).epsilon(1e-14));
  CHECK(lyapunov(sys, s, 0.5) == doctest::Approx(oracle::kEnergy3 + oracle::kF3 + 0.5 * oracle::kG3).epsilon(1e-14));

  auto m = sandwich_check(0, 0, 0, 0.1, 8, 0.1, 0.1, 1, 0.6, 1);
  CHECK(m.lower == 0.0);
  CHECK(m.upper == 0.0);
  CHECK(m.G == 0.0);
  CHECK(m.F == 0.0);

  // E = 1, F = 0.1, G = 1, eps = 0.1, A = 8
  m = sandwich_check(1, 0.1, 1, 0.1, 8, 0.1, 0.1, 1, 0.6, 1);
  CHECK(m.lower == doctest::Approx(1.2 - 0.5));
  CHECK(m.upper == doctest::Approx(1.5 - 1.2));
  CHECK(m.G == doctest::Approx(8 - 1));
  CHECK(m.F == doctest::Approx(2 * 0.1 * 0.6 - 0.1));
  m = sandwich_check(1, 0.5, 0, 0.0, 8, 0.1, 0.1, 1, 0.6, 1);
  CHECK(m.F < 0.0);
}

TEST_CASE("boundary dissipation") {
  const auto mesh = build_interval_mesh(1.0, 3);
  const auto part = classify_boundary(mesh, Point(0, 0));
  const auto sys = assemble(mesh, part, 0.1, 0.1, CoefficientSchedule::constant(3.0), identity_law(), identity_law(),
                            sigma_from_mesh(mesh, part, 0.1));
  auto s = SimState::zero(3);
  CHECK(boundary_dissipation(sys, s).D_u == 0.0);
  s.du(2) = 2.0;
  const auto d = boundary_dissipation(sys, s);
  CHECK(d.D_u == doctest::Approx(4.0 * 3.0).epsilon(1e-15));
  CHECK(d.trace_u == 4.0);
  CHECK(d.D_v == 0.0);

  const auto sat = interval_system(5, 0.1, 0.2, saturating_law(1, 2), hardening_law(0.5, 2, 0.3), true, -0.3);
  for (double x : {-3.0, -0.2, 0.0, 0.4, 2.5}) {
    auto t = SimState::zero(5);
    t.du(4) = x;
    t.dv(4) = -x;
    const auto e = boundary_dissipation(sat, t);
    CHECK(e.D_u >= 1.0 * 1.0 * e.trace_u - 1e-14);
    CHECK(e.D_v >= 0.5 * 0.5 * e.trace_v - 1e-14);
  }
}

TEST_CASE("higher energy") {
  const auto sys = interval_system(3, 0.1, 0.1, identity_law(), identity_law());
  CHECK(higher_energy(sys, SimState::zero(3)) == 0.0);
  CHECK(higher_energy(sys, hand_state()) == doctest::Approx(oracle::kEstar3).epsilon(1e-13));
}

TEST_CASE("higher energy at t = 0 against the initial bound") {
  const auto sys = interval_system(51, 0.1, 0.1, identity_law(), identity_law());
  const auto u0 = field("sine:1"), v0 = field("zero"), u1 = field("zero"), v1 = field("linear:-0.1");
  const auto init = project_initial_data(sys, u0, v0, u1, v1);
  const auto b = initial_higher_energy_bound(sys, u0, v0, u1, v1);
  const double pi = std::acos(-1.0);
  // |lap u0| = (pi/2)^2 / sqrt(2), v0 = 0, |d u0| = (pi/2) / sqrt(2), |grad v1| = 0.1
  CHECK(b.a1 == doctest::Approx(pi * pi / 4 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(b.a2 == doctest::Approx(0.1 * pi / 2 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(b.a3 == doctest::Approx(0.5 * b.a1 * b.a1 + 0.5 * b.a2 * b.a2 + 0.5 * 0.01).epsilon(1e-8));
  const double Es = higher_energy(sys, init.state);
  CHECK(std::isfinite(Es));
  CHECK(Es <= 1.1 * b.a3);
}

TEST_CASE("higher energy conserved on a conservative run") {
  const auto sys = interval_system(21, 0.0, 0.0, zero_law(), zero_law(), false);
  const auto s0 = preset_state(sys, "sine:1", "quadratic:1", "linear:0.5", "zero");
  const auto run = run_with_trace(sys, s0, 1.0, with_dt(0.01), TraceContext{});
  const double first = run.trace.samples.front().E_star;
  for (const auto& s : run.trace.samples) CHECK(std::abs(s.E_star - first) <= 1e-10 * first);
}

TEST_CASE("rellich identity") {
  const auto mesh = build_interval_mesh(1.0, 11);
  auto r = rellich_check(mesh, field("linear:1"), Point(0, 0));
  CHECK(std::abs(r.lhs_standard) <= 1e-14);
  CHECK(std::abs(r.rhs) <= 1e-14);

  r = rellich_check(mesh, field("zero"), Point(0, 0));
  CHECK(r.lhs_standard == 0.0);
  CHECK(r.rhs == 0.0);

  r = rellich_check(mesh, field("quadratic:1"), Point(0, 0));
  // |grad I_h u|^2 = 4/3 - h^2/3 on a uniform grid
  CHECK(r.rhs == doctest::Approx(8.0 / 3.0 + 0.01 / 3.0).epsilon(1e-13));
  CHECK(r.mismatch_standard == doctest::Approx(-0.01).epsilon(1e-10));  // -h^2
  CHECK(std::abs(r.mismatch_printed) > 1.0);

  const auto sq = build_rect_mesh(1, 1, 8, 8);
  r = rellich_check(sq, make_preset(parse_preset("sine:1"), 2, 1, 1), Point(-0.1, -0.1));
  CHECK(std::abs(r.mismatch_standard) < 0.05 * std::abs(r.rhs));
}

TEST_CASE("energy balance residual") {
  EnergyTrace one;
  one.samples.push_back({});
  CHECK(energy_balance_residual(one).empty());

  const auto sys = interval_system(21, 0.0, 0.0, zero_law(), zero_law(), false);
  const auto s0 = preset_state(sys, "sine:1", "quadratic:1", "linear:0.5", "zero");
  const auto run = run_with_trace(sys, s0, 1.0, with_dt(0.01), TraceContext{});
  const auto res = energy_balance_residual(run.trace);
  CHECK(res.size() == run.trace.samples.size() - 1);
  CHECK(max_abs(res) <= 1e-10);
}

TEST_CASE("observed order") {
  CHECK(observed_order(4.0, 1.0) == doctest::Approx(2.0));
  CHECK(observed_order(9.0, 1.0, 3.0) == doctest::Approx(2.0));
}

TEST_CASE("decay fit") {
  auto tr = synthetic(5.0, 0.4, 0.1, 101);
  auto fit = fit_decay_rate(tr, 0.0, 10.0);
  CHECK(std::abs(fit.rate - 0.4) <= 1e-10);
  CHECK(fit.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-10));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.samples == 101);

  fit = fit_decay_rate(synthetic(2.0, 0.0, 0.1, 11), 0.0, 1.0);
  CHECK(std::abs(fit.rate) <= 1e-14);

  // default window [0.2 T, T]
  fit = fit_decay_rate(tr);
  CHECK(fit.samples == 81);

  tr.samples[50].E = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(tr, 4.0, 6.0), FitUndefined);
  CHECK_NOTHROW(fit_decay_rate(tr, 6.0, 8.0));
  CHECK_THROWS_AS(fit_decay_rate(tr, 3.01, 3.05), FitUndefined);
}

TEST_CASE("monitors on synthetic traces") {
  auto tr = synthetic(1.0, 0.5, 0.1, 21);
  for (auto& s : tr.samples) {
    s.envelope = 3.0 * std::exp(-s.t / 3.0);
    s.slack_sandwich_lo = s.slack_sandwich_hi = s.slack_G = s.slack_F = 0.1;
  }
  CHECK(count_violations(tr).total() == 0);
  tr.samples[3].E = 10.0;
  tr.samples[4].slack_G = -1.0;
  tr.samples[5].slack_F = -1e-13;  // within tolerance
  const auto m = count_violations(tr);
  CHECK(m.envelope == 1);
  CHECK(m.G == 1);
  CHECK(m.F == 0);
  CHECK(m.total() == 2);
}

TEST_CASE("lyapunov decay excess on exact exponential data") {
  // L = E = e^{-t}: [L_{k+1} - L_k]/dt + eps2 E_k = E_k [(e^{-dt} - 1)/dt + eps2]
  auto tr = synthetic(1.0, 1.0, 0.01, 101);
  for (auto& s : tr.samples) s.lyapunov = s.E;
  CHECK(lyapunov_decay_excess(tr, 0.5) < 0.0);
  CHECK(lyapunov_decay_excess(tr, 1.5) > 0.0);
}

TEST_CASE("trace csv round trip") {
  const auto sys = interval_system(11, 0.1, 0.1, identity_law(), identity_law());
  const auto s0 = preset_state(sys, "sine:1", "zero", "zero", "linear:-0.1");
  TraceContext ctx;
  ctx.eps = 1.0 / 32;
  ctx.eta = 1.0 / 32;
  ctx.A = 8.0;
  ctx.F_coeff = 0.2;
  auto run = run_with_trace(sys, s0, 0.1, with_dt(0.01), ctx);
  run.trace.meta.config_hash = "00ff";
  REQUIRE(run.trace.samples.size() == 11);
  std::stringstream io;
  run.trace.write_csv(io);
  const std::string text = io.str();
  CHECK(text.rfind("# timostab trace v1\n", 0) == 0);
  CHECK(text.find("t,E,F,G,lyapunov,D_u,D_v,E_star,envelope,slack_sandwich_lo,slack_sandwich_hi,slack_G,slack_F\n") !=
        std::string::npos);
  const auto back = read_trace_csv(io);
  CHECK(back.meta.config_hash == "00ff");
  REQUIRE(back.samples.size() == 11);
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(back.samples[k].t == run.trace.samples[k].t);
    CHECK(back.samples[k].E == run.trace.samples[k].E);
    CHECK(back.samples[k].slack_F == run.trace.samples[k].slack_F);
  }

  // without rates the envelope and slack columns are NaN
  const auto bare = run_with_trace(sys, s0, 0.02, with_dt(0.01), TraceContext{});
  std::stringstream io2;
  bare.trace.write_csv(io2);
  CHECK(io2.str().find("nan") != std::string::npos);
  CHECK(std::isnan(read_trace_csv(io2).samples[0].envelope));

  std::stringstream bad("t,E\n0,1\n");
  CHECK_THROWS(read_trace_csv(bad));
}

TEST_CASE("svg plot") {
  auto tr = synthetic(1.0, 0.5, 0.1, 21);
  for (auto& s : tr.samples) s.envelope = 3.0 * std::exp(-s.t / 3.0);
  std::ostringstream out;
  write_svg_plot(out, tr);
  const auto svg = out.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}
