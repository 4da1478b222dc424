#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "timostab/geometry.hpp"

namespace timostab {

/// Time-dependent coefficient mu(t) of the displacement Laplacian.
struct CoefficientSchedule {
  std::function<double(double)> mu;
  std::function<double(double)> dmu;
  double mu0 = 1.0;       // certified lower bound of mu
  double mu_at_0 = 1.0;
  bool nonincreasing = true;
  std::string description;

  static CoefficientSchedule constant(double value);
  /// mu(t) = floor + (start - floor) exp(-rate t); requires start >= floor > 0, rate >= 0.
  static CoefficientSchedule decaying(double start, double floor, double rate);
};

double compute_A(int n, double M, double R, double mu0, double alpha_ratio);
double compute_P1(int n, double M, double R, double mu0);
double compute_P2(int n, double N, double tau0, double mu0, double R, double sum_nu_bound);

struct SConstants {
  double S1 = 0.0;
  double S2 = 0.0;
};
SConstants compute_S(int n, double R, double N, double L1, double L2, double mu_at_0);

struct Admissibility {
  bool admissible = false;
  double product = 0.0;          // alpha1 alpha2
  double product_limit = 0.0;    // mu0 / (64 n M^2)
  double product_slack = 0.0;    // limit - product
  double quadratic = 0.0;        // P1 alpha1^2 + P2 alpha2^2
  double quadratic_slack = 0.0;  // 7/8 - quadratic
};
Admissibility check_admissibility(double alpha1, double alpha2, int n, double M, double P1, double P2, double mu0);

struct EpsilonEta {
  double eps1_max = 0.0;
  double eps2_max = 0.0;
  double eta = 0.0;
};
EpsilonEta epsilon_eta(double A, double S1, double S2, double b1, double b2, double alpha_ratio, double mu0);

/// 3 E0 exp(-(2/3) eta t)
double decay_envelope(double E0, double eta, double t);

/// sigma at Gamma1 boundary quadrature points (empty rows for Gamma0 faces).
struct SigmaField {
  std::vector<std::vector<double>> values;
  double sup_norm = 0.0;
  bool positive = true;
  std::string description;
};
SigmaField sigma_from_mesh(const Mesh& mesh, const BoundaryPartition& partition, double alpha2);
SigmaField zero_sigma(const Mesh& mesh, const BoundaryPartition& partition);

struct HypothesisInputs {
  int n = 1;
  double M = 0.0;
  double N = 0.0;
  double R = 0.0;
  double tau0 = 0.0;
  double mu0 = 1.0;
  double mu_at_0 = 1.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double sum_nu_bound = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  bool laws_certified = true;
  bool mu_nonincreasing = true;
  bool sigma_positive = true;
  std::string sigma_description = "alpha2 * sum(nu_i)";
};

struct HypothesisReport {
  HypothesisInputs inputs;
  double A = 0.0;
  double P1 = 0.0;
  double P2 = 0.0;
  double S1 = 0.0;
  double S2 = 0.0;
  Admissibility admissibility;
  bool admissible = false;
  std::optional<EpsilonEta> rates;  // present only if admissible
  std::vector<std::string> notes;
};

/// Full evaluation of the decay hypotheses. `eta_override`, if given, must not
/// exceed the certified maximum.
HypothesisReport build_hypothesis_report(const HypothesisInputs& inputs, std::optional<double> eta_override = {});

void write_report_text(std::ostream& out, const HypothesisReport& report);
void write_report_csv(std::ostream& out, const HypothesisReport& report);

}  // namespace timostab
