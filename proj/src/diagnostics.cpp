#include "timostab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "timostab/errors.hpp"
#include "timostab/fem.hpp"
#include "timostab/hypothesis.hpp"

namespace timostab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double quad(const SparseMatrix& A, const Vector& x, const Vector& y) { return x.dot(A * y); }

double sum_components(const Point& p, int n) { return n == 1 ? p.x() : p.x() + p.y(); }

}  // namespace

double energy(const SemiDiscreteSystem& sys, const SimState& s) {
  const double r = sys.energy_weight();
  const double mu = sys.schedule().mu(s.t);
  const auto& M = sys.mass();
  const auto& K = sys.stiffness();
  return 0.5 * (quad(M, s.du, s.du) + r * quad(M, s.dv, s.dv) + mu * quad(K, s.u, s.u) + r * quad(K, s.v, s.v));
}

double functional_F(const SemiDiscreteSystem& sys, const SimState& s) {
  return sys.alpha1() * quad(sys.coupling(), s.u, s.v);
}

double functional_G(const SemiDiscreteSystem& sys, const SimState& s) {
  return functional_G(sys, s, sys.partition().x0);
}

double functional_G(const SemiDiscreteSystem& sys, const SimState& s, const Point& x0) {
  const auto& mesh = sys.mesh();
  const int n = mesh.dimension();
  double g = (n - 1) * (quad(sys.mass(), s.du, s.u) + quad(sys.mass(), s.dv, s.v));
  // Degree: velocity (1) * m (1) * gradient (0 in 1D, 1 in 2D); three points per direction are exact.
  double multiplier = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    for (const auto& q : fem::element_samples(mesh, e, 3)) {
      Point m = q.x - x0;
      if (n == 1) m.y() = 0.0;
      const double du = fem::field_value(mesh, e, q, s.du);
      const double dv = fem::field_value(mesh, e, q, s.dv);
      multiplier += q.weight * (du * m.dot(fem::field_gradient(mesh, e, q, s.u)) +
                                dv * m.dot(fem::field_gradient(mesh, e, q, s.v)));
    }
  }
  return g + 2.0 * multiplier;
}

double lyapunov(const SemiDiscreteSystem& sys, const SimState& s, double eps) {
  return energy(sys, s) + functional_F(sys, s) + eps * functional_G(sys, s);
}

SandwichMargins sandwich_check(double E, double F, double G, double eps1, double A, double alpha1, double alpha2,
                               int n, double M, double mu0) {
  if (!(mu0 > 0.0)) throw InvalidArgument("mu0 must be positive");
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw InvalidArgument("alpha must be >= 0");
  const double L = E + F + eps1 * G;
  SandwichMargins m;
  m.lower = L - 0.5 * E;
  m.upper = 1.5 * E - L;
  m.G = A * E - std::abs(G);
  m.F = 2.0 * std::sqrt(alpha1 * alpha2 * n / mu0) * M * E - std::abs(F);
  return m;
}

Dissipation boundary_dissipation(const SemiDiscreteSystem& sys, const SimState& s) {
  const Vector su = sys.trace() * s.du;
  const Vector sv = sys.trace() * s.dv;
  const Vector& w = sys.omega();
  Dissipation d;
  double du = 0.0, dv = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    du += w[i] * sys.law1()(su[i]) * su[i];
    dv += w[i] * sys.law2()(sv[i]) * sv[i];
    d.trace_u += w[i] * su[i] * su[i];
    d.trace_v += w[i] * sv[i] * sv[i];
  }
  d.D_u = sys.schedule().mu(s.t) * du;
  d.D_v = sys.energy_weight() * dv;
  return d;
}

double higher_energy(const SemiDiscreteSystem& sys, const SimState& s) {
  const auto a = rhs(sys, s);
  const double mu = sys.schedule().mu(s.t);
  const auto& M = sys.mass();
  const auto& K = sys.stiffness();
  return 0.5 * (quad(M, a.ddu, a.ddu) + quad(M, a.ddv, a.ddv) + mu * quad(K, s.du, s.du) + quad(K, s.dv, s.dv));
}

HigherEnergyBound initial_higher_energy_bound(const SemiDiscreteSystem& sys, const AnalyticField& u0,
                                              const AnalyticField& v0, const AnalyticField& u1,
                                              const AnalyticField& v1) {
  const auto& mesh = sys.mesh();
  const int n = mesh.dimension();
  double lap_u = 0, lap_v = 0, div_u = 0, div_v = 0, grad_u1 = 0, grad_v1 = 0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    for (const auto& q : fem::element_samples(mesh, e, 5)) {
      const double w = q.weight;
      lap_u += w * std::pow(u0.laplacian(q.x), 2);
      lap_v += w * std::pow(v0.laplacian(q.x), 2);
      div_u += w * std::pow(sum_components(u0.gradient(q.x), n), 2);
      div_v += w * std::pow(sum_components(v0.gradient(q.x), n), 2);
      grad_u1 += w * u1.gradient(q.x).squaredNorm();
      grad_v1 += w * v1.gradient(q.x).squaredNorm();
    }
  }
  const double mu = sys.schedule().mu(0.0);
  HigherEnergyBound b;
  b.a1 = mu * std::sqrt(lap_u) + sys.alpha1() * std::sqrt(div_v);
  b.a2 = std::sqrt(lap_v) + sys.alpha2() * std::sqrt(div_u);
  b.a3 = 0.5 * b.a1 * b.a1 + 0.5 * b.a2 * b.a2 + 0.5 * mu * grad_u1 + 0.5 * grad_v1;
  return b;
}

RellichResult rellich_check(const Mesh& mesh, const AnalyticField& u, const Point& x0) {
  const int n = mesh.dimension();
  Vector nodal(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i) nodal[static_cast<Eigen::Index>(i)] = u.value(mesh.nodes()[i]);
  auto mvec = [&](const Point& x) {
    Point m = x - x0;
    if (n == 1) m.y() = 0.0;
    return m;
  };

  double lhs = 0.0, grad2 = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    for (const auto& q : fem::element_samples(mesh, e, 5)) {
      const Point g = fem::field_gradient(mesh, e, q, nodal);
      lhs += q.weight * u.laplacian(q.x) * mvec(q.x).dot(g);
      grad2 += q.weight * g.squaredNorm();
    }
  }
  const auto rule = fem::gauss_legendre(5);
  double bnd = 0.0;
  for (const auto& face : mesh.faces()) {
    auto add = [&](const Point& x, double w) {
      const Point g = u.gradient(x);
      const double mn = mvec(x).dot(face.normal);
      bnd += w * (-mn * g.squaredNorm() + 2.0 * g.dot(face.normal) * mvec(x).dot(g));
    };
    if (n == 1) {
      add(mesh.nodes()[face.nodes[0]], 1.0);
    } else {
      const Point a = mesh.nodes()[face.nodes[0]];
      const Point b = mesh.nodes()[face.nodes[1]];
      for (std::size_t k = 0; k < rule.points.size(); ++k)
        add(a + 0.5 * (1.0 + rule.points[k]) * (b - a), 0.5 * rule.weights[k] * face.measure);
    }
  }
  RellichResult r;
  r.lhs_standard = 2.0 * lhs;
  r.lhs_printed = lhs;
  r.rhs = (n - 2) * grad2 + bnd;
  r.mismatch_standard = r.lhs_standard - r.rhs;
  r.mismatch_printed = r.lhs_printed - r.rhs;
  return r;
}

TraceSample make_sample(const SemiDiscreteSystem& sys, const SimState& s, const TraceContext& ctx, double E0) {
  TraceSample x;
  x.t = s.t;
  x.E = energy(sys, s);
  x.F = functional_F(sys, s);
  x.G = functional_G(sys, s);
  x.lyapunov = x.E + x.F + ctx.eps * x.G;
  const auto d = boundary_dissipation(sys, s);
  x.D_u = d.D_u;
  x.D_v = d.D_v;
  x.trace_u = d.trace_u;
  x.trace_v = d.trace_v;
  x.E_star = ctx.higher_energy ? higher_energy(sys, s) : kNaN;
  x.envelope = ctx.eta ? decay_envelope(E0, *ctx.eta, s.t) : kNaN;
  x.slack_sandwich_lo = x.lyapunov - 0.5 * x.E;
  x.slack_sandwich_hi = 1.5 * x.E - x.lyapunov;
  x.slack_G = ctx.A ? *ctx.A * x.E - std::abs(x.G) : kNaN;
  x.slack_F = ctx.F_coeff ? *ctx.F_coeff * x.E - std::abs(x.F) : kNaN;
  x.power_mu = 0.5 * sys.schedule().dmu(s.t) * quad(sys.stiffness(), s.u, s.u);
  return x;
}

TraceRecorder::TraceRecorder(const SemiDiscreteSystem& system, TraceContext context, EnergyTrace& trace)
    : system_(&system), context_(context), trace_(&trace) {}

void TraceRecorder::operator()(const SimState& state) {
  const double E0 = trace_->samples.empty() ? energy(*system_, state) : trace_->meta.E0;
  if (trace_->samples.empty()) trace_->meta.E0 = E0;
  trace_->samples.push_back(make_sample(*system_, state, context_, E0));
}

RunResult run_with_trace(const SemiDiscreteSystem& system, const SimState& state0, double T,
                         const StepControl& control, const TraceContext& context) {
  RunResult r;
  r.trace.meta.eta = context.eta;
  r.trace.meta.A = context.A;
  r.trace.meta.dt = control.dt;
  r.trace.samples.reserve(static_cast<std::size_t>(step_count(state0.t, T, control.dt)) + 1);
  TraceRecorder rec(system, context, r.trace);
  r.final_state = integrate(system, state0, T, control, {std::ref(rec)});
  return r;
}

namespace {

const char* const kColumns =
    "t,E,F,G,lyapunov,D_u,D_v,E_star,envelope,slack_sandwich_lo,slack_sandwich_hi,slack_G,slack_F";

void write_optional(std::ostream& out, const char* key, const std::optional<double>& v) {
  if (v) out << "# " << key << ' ' << *v << '\n';
}

}  // namespace

void EnergyTrace::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "# timostab trace v1\n";
  if (!meta.config_hash.empty()) out << "# config_hash " << meta.config_hash << '\n';
  write_optional(out, "eta", meta.eta);
  write_optional(out, "eps1", meta.eps1);
  write_optional(out, "eps2", meta.eps2);
  write_optional(out, "A", meta.A);
  write_optional(out, "S1", meta.S1);
  write_optional(out, "S2", meta.S2);
  out << "# E0 " << meta.E0 << '\n';
  out << "# compat_residual " << meta.compat_residual << '\n';
  out << "# dt " << meta.dt << '\n';
  out << kColumns << '\n';
  for (const auto& s : samples) {
    out << s.t << ',' << s.E << ',' << s.F << ',' << s.G << ',' << s.lyapunov << ',' << s.D_u << ',' << s.D_v << ','
        << s.E_star << ',' << s.envelope << ',' << s.slack_sandwich_lo << ',' << s.slack_sandwich_hi << ','
        << s.slack_G << ',' << s.slack_F << '\n';
  }
  out.precision(old);
}

EnergyTrace read_trace_csv(std::istream& in) {
  EnergyTrace trace;
  std::string line;
  bool header = false;
  auto number = [](const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) throw InvalidArgument("trace: bad number '" + tok + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, value;
      ls >> key >> value;
      if (key == "config_hash") trace.meta.config_hash = value;
      else if (key == "eta") trace.meta.eta = number(value);
      else if (key == "eps1") trace.meta.eps1 = number(value);
      else if (key == "eps2") trace.meta.eps2 = number(value);
      else if (key == "A") trace.meta.A = number(value);
      else if (key == "S1") trace.meta.S1 = number(value);
      else if (key == "S2") trace.meta.S2 = number(value);
      else if (key == "E0") trace.meta.E0 = number(value);
      else if (key == "compat_residual") trace.meta.compat_residual = number(value);
      else if (key == "dt") trace.meta.dt = number(value);
      continue;
    }
    if (!header) {
      if (line != kColumns) throw InvalidArgument("trace: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<double> v;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) v.push_back(number(tok));
    if (v.size() != 13) throw InvalidArgument("trace: row with " + std::to_string(v.size()) + " columns");
    TraceSample s;
    s.t = v[0];
    s.E = v[1];
    s.F = v[2];
    s.G = v[3];
    s.lyapunov = v[4];
    s.D_u = v[5];
    s.D_v = v[6];
    s.E_star = v[7];
    s.envelope = v[8];
    s.slack_sandwich_lo = v[9];
    s.slack_sandwich_hi = v[10];
    s.slack_G = v[11];
    s.slack_F = v[12];
    if (!trace.samples.empty() && !(s.t > trace.samples.back().t))
      throw InvalidArgument("trace: times must increase strictly");
    trace.samples.push_back(s);
  }
  if (!header) throw InvalidArgument("trace: missing header row");
  return trace;
}

std::vector<double> energy_balance_residual(const EnergyTrace& trace) {
  std::vector<double> r;
  const auto& s = trace.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double dt = s[k + 1].t - s[k].t;
    const double lhs = ((s[k + 1].E + s[k + 1].F) - (s[k].E + s[k].F)) / dt;
    const double a = s[k].power_mu - s[k].D_u - s[k].D_v;
    const double b = s[k + 1].power_mu - s[k + 1].D_u - s[k + 1].D_v;
    r.push_back(lhs - 0.5 * (a + b));
  }
  return r;
}

double max_abs(const std::vector<double>& values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double observed_order(double coarse_error, double fine_error, double ratio) {
  if (!(coarse_error > 0.0) || !(fine_error > 0.0) || !(ratio > 1.0))
    throw InvalidArgument("observed order needs positive errors and ratio > 1");
  return std::log(coarse_error / fine_error) / std::log(ratio);
}

double lyapunov_decay_excess(const EnergyTrace& trace, double eps2) {
  double m = -std::numeric_limits<double>::infinity();
  const auto& s = trace.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double dt = s[k + 1].t - s[k].t;
    m = std::max(m, (s[k + 1].lyapunov - s[k].lyapunov) / dt + eps2 * s[k].E);
  }
  return m;
}

double dG_bound_excess(const EnergyTrace& trace, double S1, double S2) {
  double m = -std::numeric_limits<double>::infinity();
  const auto& s = trace.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double dt = s[k + 1].t - s[k].t;
    const double E = 0.5 * (s[k].E + s[k + 1].E);
    const double bu = 0.5 * (s[k].trace_u + s[k + 1].trace_u);
    const double bv = 0.5 * (s[k].trace_v + s[k + 1].trace_v);
    m = std::max(m, (s[k + 1].G - s[k].G) / dt + E - S1 * bu - S2 * bv);
  }
  return m;
}

MonitorSummary count_violations(const EnergyTrace& trace) {
  MonitorSummary m;
  for (const auto& s : trace.samples) {
    if (!std::isnan(s.envelope) && s.E > s.envelope * (1.0 + 1e-9)) ++m.envelope;
    if (s.slack_sandwich_lo < -1e-12 * s.E) ++m.sandwich_lo;
    if (s.slack_sandwich_hi < -1e-12 * s.E) ++m.sandwich_hi;
    if (!std::isnan(s.slack_G) && s.slack_G < -1e-12) ++m.G;
    if (!std::isnan(s.slack_F) && s.slack_F < -1e-12) ++m.F;
  }
  return m;
}

DecayFit fit_decay_rate(const EnergyTrace& trace, double t_a, double t_b) {
  if (!(t_b >= t_a)) throw InvalidArgument("fit window must satisfy t_a <= t_b");
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (const auto& s : trace.samples) {
    if (s.t < t_a || s.t > t_b) continue;
    if (!(s.E > 0.0)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "energy is not positive at t=" << s.t << " inside the fit window";
      throw FitUndefined(msg.str());
    }
    const double y = std::log(s.E);
    n += 1;
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
    syy += y * y;
  }
  if (n < 2) throw FitUndefined("fit window holds fewer than two samples");
  const double vt = stt - st * st / n;
  const double vy = syy - sy * sy / n;
  const double cty = sty - st * sy / n;
  if (!(vt > 0.0)) throw FitUndefined("fit window has no time spread");
  DecayFit f;
  const double slope = cty / vt;
  f.rate = -slope;
  f.intercept = (sy - slope * st) / n;
  f.r2 = vy > 0.0 ? cty * cty / (vt * vy) : 1.0;
  f.samples = static_cast<std::size_t>(n);
  return f;
}

DecayFit fit_decay_rate(const EnergyTrace& trace) {
  if (trace.samples.empty()) throw FitUndefined("empty trace");
  const double T = trace.samples.back().t;
  const double t0 = trace.samples.front().t;
  return fit_decay_rate(trace, t0 + 0.2 * (T - t0), T);
}

void write_svg_plot(std::ostream& out, const EnergyTrace& trace) {
  const double W = 640, H = 400, pad = 50;
  double t0 = 0, t1 = 1, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  if (!trace.samples.empty()) {
    t0 = trace.samples.front().t;
    t1 = std::max(trace.samples.back().t, t0 + 1e-300);
  }
  for (const auto& s : trace.samples) {
    for (double v : {s.E, s.envelope}) {
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
    }
  }
  if (!std::isfinite(lo)) lo = -1, hi = 0;
  if (hi - lo < 1e-12) hi = lo + 1;
  auto X = [&](double t) { return pad + (W - 2 * pad) * (t - t0) / (t1 - t0); };
  auto Y = [&](double v) { return H - pad - (H - 2 * pad) * (std::log10(v) - lo) / (hi - lo); };
  const auto old = out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n";
  auto polyline = [&](auto get, const char* colour, const char* dash) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\"" << dash << " points=\"";
    const std::size_t stride = std::max<std::size_t>(1, trace.samples.size() / 2000);
    for (std::size_t i = 0; i < trace.samples.size(); i += stride) {
      const double v = get(trace.samples[i]);
      if (v > 0.0 && std::isfinite(v)) out << X(trace.samples[i].t) << ',' << Y(v) << ' ';
    }
    out << "\"/>\n";
  };
  polyline([](const TraceSample& s) { return s.E; }, "steelblue", "");
  polyline([](const TraceSample& s) { return s.envelope; }, "firebrick", " stroke-dasharray=\"6,4\"");
  out << "<text x=\"" << pad << "\" y=\"" << pad - 10 << "\" font-size=\"12\">log10 E (solid), envelope (dashed); t in ["
      << t0 << ", " << t1 << "], log10 range [" << lo << ", " << hi << "]</text>\n";
  out << "</svg>\n";
  out.precision(old);
}

}  // namespace timostab
