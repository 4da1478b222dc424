#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "timostab/config.hpp"
#include "timostab/diagnostics.hpp"
#include "timostab/discretization.hpp"
#include "timostab/hypothesis.hpp"

namespace timostab {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,
  kExitInadmissible = 2,
  kExitStepFailure = 3,
  kExitUsage = 64,
};

Mesh build_mesh(const MeshSpec& spec);
CoefficientSchedule build_schedule(const ScheduleSpec& spec);

/// Hypothesis inputs measured on a mesh and partition.
HypothesisInputs measure_hypothesis_inputs(const Mesh& mesh, const BoundaryPartition& partition,
                                           const CoefficientSchedule& schedule, const FeedbackLaw& law1,
                                           const FeedbackLaw& law2, double alpha1, double alpha2,
                                           const SigmaField& sigma);

/// Everything a run needs, built from a config.
struct Problem {
  RunConfig config;
  std::unique_ptr<SemiDiscreteSystem> system;
  AnalyticField u0, v0, u1, v1;
  InitialData initial;
  /// Set when the hypothesis constants could be evaluated; `report_error` otherwise.
  std::optional<HypothesisReport> report;
  std::string report_error;
  TraceContext context;
};

std::unique_ptr<Problem> build_problem(const RunConfig& config);

/// Evaluates the hypotheses; prints the report and writes report_file into out_dir if given.
int run_check(const RunConfig& config, std::ostream& out, const std::optional<std::filesystem::path>& out_dir);

struct SimulateSummary {
  long long steps = 0;
  double E0 = 0.0;
  double E_final = 0.0;
  std::optional<double> eta;
  std::optional<DecayFit> fit;
  MonitorSummary violations;
  double compat_residual = 0.0;
  double balance_residual = 0.0;
  std::optional<double> lyapunov_excess;
  std::optional<double> dG_excess;
};

struct SimulateOutput {
  RunResult result;
  SimulateSummary summary;
};

/// Runs the configured simulation (from the restart checkpoint if set).
/// Throws StepFailure on a failed step.
SimulateOutput simulate(const Problem& problem);

int run_simulate(const RunConfig& config, std::ostream& out, const std::filesystem::path& out_dir, bool plot);

/// One named invariant check of the verification suite.
struct VerifyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};
std::vector<VerifyResult> verify_suites(const RunConfig& config);
int run_verify(const RunConfig& config, std::ostream& out);

struct SweepRow {
  std::size_t index = 0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::string law;
  bool admissible = false;
  std::optional<double> eta;
  std::optional<double> fitted_rate;
  long long violations = -1;
  std::string note;
};
std::vector<SweepRow> sweep(const RunConfig& config);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
int run_sweep(const RunConfig& config, std::ostream& out, const std::optional<std::filesystem::path>& out_dir);

int run_fit(const std::filesystem::path& trace_path, std::optional<double> t_a, std::optional<double> t_b,
            std::ostream& out);

void configure_logging();

}  // namespace timostab
