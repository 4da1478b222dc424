#include "timostab/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "timostab/errors.hpp"

namespace timostab {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw InvalidArgument(std::string(name) + " must be positive and finite");
}

void require_dimension(int n) {
  if (n != 1 && n != 2) throw InvalidArgument("dimension n must be 1 or 2");
}

}  // namespace

CoefficientSchedule CoefficientSchedule::constant(double value) {
  require_positive(value, "mu");
  CoefficientSchedule s;
  s.mu = [value](double) { return value; };
  s.dmu = [](double) { return 0.0; };
  s.mu0 = value;
  s.mu_at_0 = value;
  s.nonincreasing = true;
  std::ostringstream d;
  d << std::setprecision(17) << "constant(" << value << ")";
  s.description = d.str();
  return s;
}

CoefficientSchedule CoefficientSchedule::decaying(double start, double floor, double rate) {
  require_positive(floor, "mu floor");
  if (!(start >= floor)) throw InvalidArgument("mu start must be >= floor");
  if (!(rate >= 0.0)) throw InvalidArgument("mu decay rate must be >= 0");
  CoefficientSchedule s;
  s.mu = [=](double t) { return floor + (start - floor) * std::exp(-rate * t); };
  s.dmu = [=](double t) { return -rate * (start - floor) * std::exp(-rate * t); };
  s.mu0 = floor;
  s.mu_at_0 = start;
  s.nonincreasing = true;
  std::ostringstream d;
  d << std::setprecision(17) << "decaying(" << start << "," << floor << "," << rate << ")";
  s.description = d.str();
  return s;
}

double compute_A(int n, double M, double R, double mu0, double alpha_ratio) {
  require_dimension(n);
  require_positive(M, "M");
  require_positive(R, "R");
  require_positive(mu0, "mu0");
  require_positive(alpha_ratio, "alpha1/alpha2");
  const double nm1 = n - 1;
  const double root = std::sqrt(mu0);
  return 2.0 * nm1 * M / root + 2.0 * nm1 * M * alpha_ratio + 4.0 * R / root + 4.0 * R * alpha_ratio;
}

double compute_P1(int n, double M, double R, double mu0) {
  require_dimension(n);
  require_positive(M, "M");
  require_positive(R, "R");
  require_positive(mu0, "mu0");
  const double nm1 = n - 1;
  return 4.0 * nm1 * nm1 * n * M * M / mu0 + 16.0 * R * R * n / mu0;
}

double compute_P2(int n, double N, double tau0, double mu0, double R, double sum_nu_bound) {
  require_dimension(n);
  require_positive(N, "N");
  require_positive(tau0, "tau0");
  require_positive(mu0, "mu0");
  require_positive(R, "R");
  require_positive(sum_nu_bound, "sum_nu_bound");
  const double nm1 = n - 1;
  const double s2 = sum_nu_bound * sum_nu_bound;
  return 4.0 * nm1 * nm1 * s2 * std::pow(N, 4) / mu0 + 2.0 * N * N / (tau0 * mu0) * s2 + 16.0 * R * R * n / mu0;
}

SConstants compute_S(int n, double R, double N, double L1, double L2, double mu_at_0) {
  require_dimension(n);
  require_positive(R, "R");
  require_positive(N, "N");
  require_positive(L1, "L1");
  require_positive(L2, "L2");
  require_positive(mu_at_0, "mu(0)");
  const double nm1 = n - 1;
  SConstants s;
  // The second term of S1 carries L2, as printed in the source formula.
  s.S1 = 4.0 * nm1 * nm1 * mu_at_0 * R * L1 * L1 * N * N + mu_at_0 * R * R * L2 * L2 + 1.0;
  s.S2 = 4.0 * nm1 * nm1 * R * L2 * L2 * N * N + 2.0 * R * R * L2 * L2 + 1.0;
  return s;
}

Admissibility check_admissibility(double alpha1, double alpha2, int n, double M, double P1, double P2, double mu0) {
  require_positive(alpha1, "alpha1");
  require_positive(alpha2, "alpha2");
  require_dimension(n);
  require_positive(M, "M");
  require_positive(P1, "P1");
  require_positive(P2, "P2");
  require_positive(mu0, "mu0");
  Admissibility a;
  a.product = alpha1 * alpha2;
  a.product_limit = mu0 / (64.0 * n * M * M);
  a.product_slack = a.product_limit - a.product;
  a.quadratic = P1 * alpha1 * alpha1 + P2 * alpha2 * alpha2;
  a.quadratic_slack = 7.0 / 8.0 - a.quadratic;
  a.admissible = a.product <= a.product_limit && a.quadratic <= 7.0 / 8.0;
  return a;
}

EpsilonEta epsilon_eta(double A, double S1, double S2, double b1, double b2, double alpha_ratio, double mu0) {
  require_positive(A, "A");
  require_positive(S1, "S1");
  require_positive(S2, "S2");
  require_positive(b1, "b1");
  require_positive(b2, "b2");
  require_positive(alpha_ratio, "alpha1/alpha2");
  require_positive(mu0, "mu0");
  EpsilonEta e;
  e.eps1_max = 1.0 / (4.0 * A);
  e.eps2_max = std::min(mu0 * b1 / S1, alpha_ratio * b2 / S2);
  e.eta = std::min(e.eps1_max, e.eps2_max);
  return e;
}

double decay_envelope(double E0, double eta, double t) {
  if (!(E0 >= 0.0)) throw InvalidArgument("E0 must be >= 0");
  require_positive(eta, "eta");
  if (!(t >= 0.0)) throw InvalidArgument("envelope time must be >= 0");
  return 3.0 * E0 * std::exp(-(2.0 / 3.0) * eta * t);
}

SigmaField sigma_from_mesh(const Mesh& mesh, const BoundaryPartition& partition, double alpha2) {
  SigmaField s;
  s.values.resize(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (!partition.on_gamma1(f)) continue;
    const Point& nu = mesh.faces()[f].normal;
    const double sum = mesh.dimension() == 1 ? nu.x() : nu.x() + nu.y();
    const double value = alpha2 * sum;
    s.values[f].assign(mesh.faces()[f].quadrature.size(), value);
    s.sup_norm = std::max(s.sup_norm, std::abs(value));
    if (!(value > 0.0)) s.positive = false;
  }
  std::ostringstream d;
  d << std::setprecision(17) << "alpha2*sum(nu_i), alpha2=" << alpha2;
  s.description = d.str();
  return s;
}

SigmaField zero_sigma(const Mesh& mesh, const BoundaryPartition& partition) {
  SigmaField s;
  s.values.resize(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f)
    if (partition.on_gamma1(f)) s.values[f].assign(mesh.faces()[f].quadrature.size(), 0.0);
  s.positive = false;
  s.description = "zero";
  return s;
}

HypothesisReport build_hypothesis_report(const HypothesisInputs& in, std::optional<double> eta_override) {
  HypothesisReport r;
  r.inputs = in;
  const double ratio = in.alpha1 / in.alpha2;
  r.A = compute_A(in.n, in.M, in.R, in.mu0, ratio);
  r.P1 = compute_P1(in.n, in.M, in.R, in.mu0);
  r.P2 = compute_P2(in.n, in.N, in.tau0, in.mu0, in.R, in.sum_nu_bound);
  if (in.laws_certified) {
    const auto s = compute_S(in.n, in.R, in.N, in.L1, in.L2, in.mu_at_0);
    r.S1 = s.S1;
    r.S2 = s.S2;
  } else {
    r.notes.push_back("feedback laws lack strong monotonicity or linear growth: no decay rate certified");
  }
  r.admissibility = check_admissibility(in.alpha1, in.alpha2, in.n, in.M, r.P1, r.P2, in.mu0);
  if (!r.admissibility.admissible) r.notes.push_back("alpha1, alpha2 violate the admissibility conditions");
  if (!in.mu_nonincreasing) r.notes.push_back("coefficient schedule is not nonincreasing");
  if (!in.sigma_positive) r.notes.push_back("sigma is not positive on Gamma1 (sum of normal components <= 0)");
  r.admissible = r.admissibility.admissible && in.laws_certified && in.mu_nonincreasing && in.sigma_positive;
  if (r.admissible) {
    auto e = epsilon_eta(r.A, r.S1, r.S2, in.b1, in.b2, ratio, in.mu0);
    if (eta_override) {
      if (!(*eta_override > 0.0) || *eta_override > e.eta)
        throw InvalidArgument("eta override must lie in (0, certified eta]");
      e.eta = *eta_override;
    }
    r.rates = e;
  }
  if (ratio > 1.0) r.notes.push_back("alpha1 > alpha2: the dG/dt estimate assumes alpha1/alpha2 <= 1");
  return r;
}

namespace {

template <typename Row>
void for_each_field(const HypothesisReport& r, Row row) {
  const auto& in = r.inputs;
  row("n", in.n);
  row("M", in.M);
  row("N", in.N);
  row("R", in.R);
  row("tau0", in.tau0);
  row("mu0", in.mu0);
  row("mu_at_0", in.mu_at_0);
  row("b1", in.b1);
  row("b2", in.b2);
  row("L1", in.L1);
  row("L2", in.L2);
  row("sum_nu_bound", in.sum_nu_bound);
  row("alpha1", in.alpha1);
  row("alpha2", in.alpha2);
  row("A", r.A);
  row("P1", r.P1);
  row("P2", r.P2);
  row("S1", r.S1);
  row("S2", r.S2);
  row("alpha_product", r.admissibility.product);
  row("alpha_product_limit", r.admissibility.product_limit);
  row("alpha_product_slack", r.admissibility.product_slack);
  row("quadratic_form", r.admissibility.quadratic);
  row("quadratic_slack", r.admissibility.quadratic_slack);
  row("admissible", r.admissible ? 1 : 0);
  if (r.rates) {
    row("eps1_max", r.rates->eps1_max);
    row("eps2_max", r.rates->eps2_max);
    row("eta", r.rates->eta);
  }
}

}  // namespace

void write_report_text(std::ostream& out, const HypothesisReport& r) {
  const auto old = out.precision(17);
  for_each_field(r, [&](const char* name, auto value) { out << std::left << std::setw(22) << name << value << '\n'; });
  out << std::left << std::setw(22) << "sigma" << r.inputs.sigma_description << '\n';
  for (const auto& note : r.notes) out << "note: " << note << '\n';
  out.precision(old);
}

void write_report_csv(std::ostream& out, const HypothesisReport& r) {
  const auto old = out.precision(17);
  out << "quantity,value\n";
  for_each_field(r, [&](const char* name, auto value) { out << name << ',' << value << '\n'; });
  out.precision(old);
}

}  // namespace timostab
