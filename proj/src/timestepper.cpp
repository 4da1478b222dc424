#include "timostab/timestepper.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "timostab/errors.hpp"

namespace timostab {

void StepControl::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(newton_tol > 0.0)) throw InvalidArgument("newton_tol must be positive");
  if (newton_max < 1) throw InvalidArgument("newton_max must be >= 1");
}

// J0 = [[2M + dt^2/2 mu K, dt^2/2 a1 C], [dt^2/2 (S - a2 C), 2M + dt^2/2 K]] acting on
// the midpoint velocities, with Z = J0^{-1} B' and H = B Z for the stacked trace B.
struct TimeStepper::Factorization {
  double mu = std::numeric_limits<double>::quiet_NaN();
  Eigen::SparseLU<SparseMatrix> lu;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd H;
  double H_norm = 0.0;
};

TimeStepper::TimeStepper(const SemiDiscreteSystem& system, StepControl control)
    : system_(&system), control_(control), cache_(std::make_unique<Factorization>()) {
  control_.validate();
}

TimeStepper::~TimeStepper() = default;
TimeStepper::TimeStepper(TimeStepper&&) noexcept = default;
TimeStepper& TimeStepper::operator=(TimeStepper&&) noexcept = default;

TimeStepper::Factorization& TimeStepper::factorization(double mu) {
  Factorization& f = *cache_;
  if (f.mu == mu) return f;
  const auto& sys = *system_;
  const double dt = control_.dt;
  const double h2 = 0.5 * dt * dt;
  const auto n = static_cast<int>(sys.free_count());
  const SparseMatrix uu = 2.0 * sys.mass_free() + (h2 * mu) * sys.stiffness_free();
  const SparseMatrix uv = (h2 * sys.alpha1()) * sys.coupling_free();
  const SparseMatrix vu = h2 * (SparseMatrix(sys.sigma_free()) - sys.alpha2() * sys.coupling_free());
  const SparseMatrix vv = 2.0 * sys.mass_free() + h2 * sys.stiffness_free();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(uu.nonZeros() + uv.nonZeros() + vu.nonZeros() + vv.nonZeros()));
  auto put = [&trip](const SparseMatrix& m, int r0, int c0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        trip.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()), it.value());
  };
  put(uu, 0, 0);
  put(uv, 0, n);
  put(vu, n, 0);
  put(vv, n, n);
  SparseMatrix J0(2 * n, 2 * n);
  J0.setFromTriplets(trip.begin(), trip.end());
  J0.makeCompressed();

  f.lu.analyzePattern(J0);
  f.lu.factorize(J0);
  if (f.lu.info() != Eigen::Success) throw StepFailure("midpoint matrix factorization failed", 0.0, 0.0);

  const auto q = static_cast<int>(sys.trace_free().rows());
  const Eigen::MatrixXd Bt = Eigen::MatrixXd(sys.trace_free()).transpose();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2 * n, 2 * q);
  rhs.block(0, 0, n, q) = Bt;
  rhs.block(n, q, n, q) = Bt;
  f.Z = f.lu.solve(rhs);
  f.H.resize(2 * q, 2 * q);
  const Eigen::MatrixXd B = Eigen::MatrixXd(sys.trace_free());
  f.H.topRows(q) = B * f.Z.topRows(n);
  f.H.bottomRows(q) = B * f.Z.bottomRows(n);
  f.H_norm = f.H.cwiseAbs().rowwise().sum().maxCoeff();
  f.mu = mu;
  return f;
}

// phi = s - g + dt H P(s), with P = [mu omega p1(s_u); omega p2(s_v)].
void TimeStepper::residual(const Factorization& f, double mu, const Vector& g, const Vector& s, Vector& phi,
                           Vector& P) const {
  const auto& sys = *system_;
  const Eigen::Index q = sys.omega().size();
  P.resize(2 * q);
  for (Eigen::Index i = 0; i < q; ++i) {
    P[i] = mu * sys.omega()[i] * sys.law1()(s[i]);
    P[q + i] = sys.omega()[i] * sys.law2()(s[q + i]);
  }
  phi = s - g + control_.dt * (f.H * P);
}

SimState TimeStepper::step(const SimState& state) {
  const auto& sys = *system_;
  const double dt = control_.dt;
  const double tm = state.t + 0.5 * dt;
  const double mu = sys.schedule().mu(tm);
  stats_ = StepStats{};

  Factorization& f = factorization(mu);
  const auto n = static_cast<Eigen::Index>(sys.free_count());
  const Vector u = sys.restrict(state.u);
  const Vector v = sys.restrict(state.v);
  const Vector w = sys.restrict(state.du);
  const Vector z = sys.restrict(state.dv);

  Vector r(2 * n);
  r.head(n) = 2.0 * (sys.mass_free() * w) - dt * mu * (sys.stiffness_free() * u) -
              dt * sys.alpha1() * (sys.coupling_free() * v);
  r.tail(n) = 2.0 * (sys.mass_free() * z) - dt * (sys.stiffness_free() * v) -
              dt * (sys.sigma_free() * u - sys.alpha2() * (sys.coupling_free() * u));
  const Vector y = f.lu.solve(r);

  const Eigen::Index q = sys.omega().size();
  Vector g(2 * q);
  g.head(q) = sys.trace_free() * y.head(n);
  g.tail(q) = sys.trace_free() * y.tail(n);

  Vector s = g;
  Vector phi, P;
  residual(f, mu, g, s, phi, P);
  auto scale = [&]() { return std::max({g.lpNorm<Eigen::Infinity>(), s.lpNorm<Eigen::Infinity>(), 1e-300}); };
  double res = phi.lpNorm<Eigen::Infinity>();
  bool converged = res <= control_.newton_tol * scale();

  Eigen::MatrixXd J(2 * q, 2 * q);
  Vector dP(2 * q);
  while (!converged && stats_.newton_iterations < control_.newton_max) {
    ++stats_.newton_iterations;
    for (Eigen::Index i = 0; i < q; ++i) {
      dP[i] = mu * sys.omega()[i] * sys.law1().slope(s[i]);
      dP[q + i] = sys.omega()[i] * sys.law2().slope(s[q + i]);
    }
    J = dt * f.H * dP.asDiagonal();
    J.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const Vector delta = lu.solve(-phi);
    if (!delta.allFinite()) break;
    double lambda = 1.0;
    Vector trial, phi_t, P_t;
    for (;;) {
      trial = s + lambda * delta;
      residual(f, mu, g, trial, phi_t, P_t);
      const double rt = phi_t.lpNorm<Eigen::Infinity>();
      if (rt < res || lambda < 1.0 / 1024.0) break;
      lambda *= 0.5;
    }
    s = trial;
    phi = phi_t;
    P = P_t;
    res = phi.lpNorm<Eigen::Infinity>();
    converged = res <= control_.newton_tol * scale();
  }

  if (!converged && control_.fallback) {
    // s <- g - dt H P(s) contracts when dt |H| max(mu |omega| L1, |omega| L2) < 1.
    const double wmax = sys.omega().cwiseAbs().maxCoeff();
    const double lip = std::max(mu * wmax * sys.law1().L(), wmax * sys.law2().L());
    const double contraction = dt * f.H_norm * lip;
    if (std::isfinite(contraction) && contraction < 1.0) {
      stats_.used_fallback = true;
      const int cap = 100 * control_.newton_max;
      while (!converged && stats_.fallback_iterations < cap) {
        ++stats_.fallback_iterations;
        s = g - dt * (f.H * P);
        residual(f, mu, g, s, phi, P);
        res = phi.lpNorm<Eigen::Infinity>();
        converged = res <= control_.newton_tol * scale();
      }
    }
  }
  stats_.residual = res;
  if (!converged || !std::isfinite(res)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "nonlinear midpoint solve did not converge at t=" << state.t + dt << " (residual " << res << ")";
    throw StepFailure(msg.str(), state.t + dt, res);
  }

  const Vector x = y - dt * (f.Z * P);
  const Vector wm = x.head(n);
  const Vector zm = x.tail(n);
  SimState next;
  next.t = state.t + dt;
  next.u = sys.expand(u + dt * wm);
  next.v = sys.expand(v + dt * zm);
  next.du = sys.expand(2.0 * wm - w);
  next.dv = sys.expand(2.0 * zm - z);
  return next;
}

SimState step(const SemiDiscreteSystem& system, const SimState& state, const StepControl& control) {
  TimeStepper stepper(system, control);
  return stepper.step(state);
}

long long step_count(double t0, double T, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(T >= t0)) throw InvalidArgument("final time precedes the initial time");
  const double ratio = (T - t0) / dt;
  const long long k = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(k)) > 1e-6)
    throw InvalidArgument("final time is not a whole number of steps from the initial time");
  return k;
}

SimState integrate(const SemiDiscreteSystem& system, const SimState& state0, double T, const StepControl& control,
                   const std::vector<Observer>& observers) {
  const long long steps = step_count(state0.t, T, control.dt);
  TimeStepper stepper(system, control);
  SimState s = state0;
  for (const auto& obs : observers) obs(s);
  const double t0 = state0.t;
  for (long long k = 1; k <= steps; ++k) {
    s = stepper.step(s);
    s.t = t0 + static_cast<double>(k) * control.dt;
    for (const auto& obs : observers) obs(s);
  }
  return s;
}

void write_checkpoint(std::ostream& out, const SimState& state, const std::string& config_hash) {
  const auto old = out.precision(17);
  out << "# timostab checkpoint v1\n";
  out << "t " << state.t << '\n';
  out << "nodes " << state.u.size() << '\n';
  out << "config_hash " << (config_hash.empty() ? "-" : config_hash) << '\n';
  out << "# u v du dv\n";
  for (Eigen::Index i = 0; i < state.u.size(); ++i)
    out << state.u[i] << ' ' << state.v[i] << ' ' << state.du[i] << ' ' << state.dv[i] << '\n';
  out.precision(old);
}

Checkpoint read_checkpoint(std::istream& in) {
  auto fail = [](const std::string& what) { throw InvalidArgument("checkpoint: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != "# timostab checkpoint v1") fail("missing or unsupported header");
  Checkpoint c;
  std::string key;
  long long nodes = -1;
  if (!(in >> key >> c.state.t) || key != "t") fail("expected t");
  if (!(in >> key >> nodes) || key != "nodes" || nodes < 0) fail("expected nodes");
  if (!(in >> key >> c.config_hash) || key != "config_hash") fail("expected config_hash");
  if (c.config_hash == "-") c.config_hash.clear();
  in >> std::ws;
  if (!std::getline(in, line) || line.rfind('#', 0) != 0) fail("expected column comment");
  c.state.u.resize(nodes);
  c.state.v.resize(nodes);
  c.state.du.resize(nodes);
  c.state.dv.resize(nodes);
  // strtod keeps subnormal values that operator>> would reject.
  auto number = [&](double& out) {
    std::string tok;
    if (!(in >> tok)) fail("truncated node data");
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail("bad number '" + tok + "'");
  };
  for (long long i = 0; i < nodes; ++i) {
    number(c.state.u[i]);
    number(c.state.v[i]);
    number(c.state.du[i]);
    number(c.state.dv[i]);
  }
  return c;
}

}  // namespace timostab
