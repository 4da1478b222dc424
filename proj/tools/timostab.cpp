// Command-line front end: check, simulate, verify, sweep, fit.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "timostab/config.hpp"
#include "timostab/errors.hpp"
#include "timostab/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<double> dt;
  std::optional<double> T;
  int refine = 0;
  bool plot = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration (INI)");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--dt", c.dt, "override time.dt");
  cmd->add_option("--T", c.T, "override time.T");
  cmd->add_option("--refine", c.refine, "halve h and dt this many times")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--plot", c.plot, "emit an SVG plot of E and the envelope");
}

timostab::RunConfig load(const Common& c) {
  timostab::ConfigOverrides o;
  o.dt = c.dt;
  o.T = c.T;
  o.refine = c.refine;
  return timostab::load_config(c.config, o);
}

}  // namespace

int main(int argc, char** argv) {
  timostab::configure_logging();
  CLI::App app{"timostab: boundary-stabilized coupled wave simulator"};
  app.require_subcommand(1);

  Common check_opts, sim_opts, verify_opts, sweep_opts, fit_opts;
  std::string trace;
  std::optional<double> from, to;
  auto* check = app.add_subcommand("check", "evaluate the decay hypotheses");
  add_common(check, check_opts);
  auto* sim = app.add_subcommand("simulate", "run a simulation and write trace, checkpoint and summary");
  add_common(sim, sim_opts);
  auto* verify = app.add_subcommand("verify", "run the invariant verification suites");
  add_common(verify, verify_opts);
  auto* sweep = app.add_subcommand("sweep", "evaluate a parameter grid");
  add_common(sweep, sweep_opts);
  auto* fit = app.add_subcommand("fit", "fit an exponential decay rate to a trace");
  add_common(fit, fit_opts, false);
  fit->add_option("--trace", trace, "trace CSV written by simulate");
  fit->add_option("--from", from, "window start (default 0.2 T)");
  fit->add_option("--to", to, "window end (default T)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : timostab::kExitUsage;
  }

  try {
    if (*check) {
      const auto cfg = load(check_opts);
      std::optional<std::filesystem::path> out;
      if (!check_opts.out.empty()) out = check_opts.out;
      return timostab::run_check(cfg, std::cout, out);
    }
    if (*sim) {
      const auto cfg = load(sim_opts);
      return timostab::run_simulate(cfg, std::cout, sim_opts.out.empty() ? "." : sim_opts.out, sim_opts.plot);
    }
    if (*verify) return timostab::run_verify(load(verify_opts), std::cout);
    if (*sweep) {
      std::optional<std::filesystem::path> out;
      if (!sweep_opts.out.empty()) out = sweep_opts.out;
      return timostab::run_sweep(load(sweep_opts), std::cout, out);
    }
    if (*fit) {
      if (trace.empty()) {
        if (fit_opts.config.empty()) {
          std::cerr << "fit needs --trace or --config\n";
          return timostab::kExitUsage;
        }
        const auto cfg = load(fit_opts);
        const std::filesystem::path dir = fit_opts.out.empty() ? "." : fit_opts.out;
        const int code = timostab::run_simulate(cfg, std::cerr, dir, fit_opts.plot);
        if (code != timostab::kExitOk) return code;
        trace = (dir / cfg.trace_file).string();
      }
      return timostab::run_fit(trace, from, to, std::cout);
    }
  } catch (const timostab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return timostab::kExitUsage;
  } catch (const timostab::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return timostab::kExitUsage;
  } catch (const timostab::FitUndefined& e) {
    std::cerr << "fit undefined: " << e.what() << '\n';
    return timostab::kExitFailed;
  } catch (const timostab::StepFailure& e) {
    std::cerr << "step failure at t=" << e.time() << ": " << e.what() << '\n';
    return timostab::kExitStepFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return timostab::kExitFailed;
  }
  return timostab::kExitUsage;
}
