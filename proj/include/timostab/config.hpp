#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timostab/feedback.hpp"
#include "timostab/fields.hpp"

namespace timostab {

struct MeshSpec {
  std::string kind = "interval";  // interval | rect | file
  double length = 1.0;
  int nodes = 201;
  double lx = 1.0;
  double ly = 1.0;
  int nx = 8;
  int ny = 8;
  std::string file;
};

struct ScheduleSpec {
  std::string kind = "constant";  // constant | decaying
  double value = 1.0;
  double start = 1.0;
  double floor = 1.0;
  double rate = 0.0;
};

struct SweepSpec {
  std::vector<double> alpha;
  std::vector<std::string> laws;
  bool simulate = true;
};

struct VerifySpec {
  std::vector<std::string> suites;
  std::string inject_fault = "none";  // none | stiffness_symmetry
};

/// Parsed run configuration. Every section and key is optional except where
/// noted in the README; unknown sections or keys are rejected.
struct RunConfig {
  MeshSpec mesh;
  double x0 = 0.0;
  double y0 = 0.0;
  double alpha1 = 0.1;
  double alpha2 = 0.1;
  std::string sigma = "normal_sum";  // normal_sum | zero
  ScheduleSpec schedule;
  LawSpec law1;
  LawSpec law2;
  PresetSpec u0{"sine", 1.0};
  PresetSpec v0{"zero", 1.0};
  PresetSpec u1{"zero", 1.0};
  PresetSpec v1{"linear", -0.1};
  double dt = 1e-3;
  double T = 1.0;
  double newton_tol = 1e-12;
  int newton_max = 50;
  bool fallback = true;
  std::string restart;
  std::optional<double> eta;
  std::string trace_file = "trace.csv";
  std::string checkpoint_file = "checkpoint.txt";
  std::string summary_file = "summary.txt";
  std::string report_file = "report.csv";
  std::string plot_file = "plot.svg";
  SweepSpec sweep;
  VerifySpec verify;

  /// FNV-1a (64 bit, hex) of the canonical key=value listing, excluding the
  /// run-length keys (time.T, time.restart) and the output section.
  std::string hash;
  /// Canonical "section.key=value" lines, sorted.
  std::vector<std::string> canonical;
};

struct ConfigOverrides {
  std::optional<double> dt;
  std::optional<double> T;
  int refine = 0;  // halve h and dt this many times
};

RunConfig parse_config(std::istream& in, const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

std::string fnv1a_hex(const std::string& text);

}  // namespace timostab
