#include "timostab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "timostab/errors.hpp"
#include "timostab/fem.hpp"
#include "timostab/timestepper.hpp"

namespace timostab {

namespace fs = std::filesystem;

void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("timostab");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("TIMOSTAB_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

Mesh build_mesh(const MeshSpec& spec) {
  if (spec.kind == "interval") return build_interval_mesh(spec.length, spec.nodes);
  if (spec.kind == "rect") return build_rect_mesh(spec.lx, spec.ly, spec.nx, spec.ny);
  std::ifstream in(spec.file);
  if (!in) throw ConfigError("cannot open mesh file '" + spec.file + "'");
  return read_mesh(in);
}

CoefficientSchedule build_schedule(const ScheduleSpec& spec) {
  if (spec.kind == "constant") return CoefficientSchedule::constant(spec.value);
  return CoefficientSchedule::decaying(spec.start, spec.floor, spec.rate);
}

HypothesisInputs measure_hypothesis_inputs(const Mesh& mesh, const BoundaryPartition& partition,
                                           const CoefficientSchedule& schedule, const FeedbackLaw& law1,
                                           const FeedbackLaw& law2, double alpha1, double alpha2,
                                           const SigmaField& sigma) {
  const auto shape = geometric_constants(mesh, partition);
  const auto emb = embedding_constants(mesh, partition);
  HypothesisInputs in;
  in.n = mesh.dimension();
  in.M = emb.M;
  in.N = emb.N;
  in.R = shape.R;
  in.tau0 = shape.tau0;
  in.mu0 = schedule.mu0;
  in.mu_at_0 = schedule.mu_at_0;
  in.b1 = law1.b();
  in.b2 = law2.b();
  in.L1 = law1.L();
  in.L2 = law2.L();
  in.sum_nu_bound = normal_sum_bound(mesh, partition);
  in.alpha1 = alpha1;
  in.alpha2 = alpha2;
  in.laws_certified = law1.certified() && law2.certified();
  in.mu_nonincreasing = schedule.nonincreasing;
  in.sigma_positive = sigma.positive;
  in.sigma_description = sigma.description;
  return in;
}

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string("nan"); }

std::pair<double, double> domain_extent(const Mesh& mesh) {
  double lx = 0.0, ly = 0.0;
  for (const auto& p : mesh.nodes()) {
    lx = std::max(lx, p.x());
    ly = std::max(ly, p.y());
  }
  return {lx > 0.0 ? lx : 1.0, ly > 0.0 ? ly : 1.0};
}

}  // namespace

std::unique_ptr<Problem> build_problem(const RunConfig& config) {
  auto p = std::make_unique<Problem>();
  p->config = config;
  Mesh mesh = build_mesh(config.mesh);
  const Point x0(config.x0, mesh.dimension() == 1 ? 0.0 : config.y0);
  BoundaryPartition partition = classify_boundary(mesh, x0);
  auto schedule = build_schedule(config.schedule);
  auto law1 = make_law(config.law1);
  auto law2 = make_law(config.law2);
  SigmaField sigma = config.sigma == "zero" ? zero_sigma(mesh, partition)
                                            : sigma_from_mesh(mesh, partition, config.alpha2);

  try {
    const auto inputs =
        measure_hypothesis_inputs(mesh, partition, schedule, law1, law2, config.alpha1, config.alpha2, sigma);
    p->report = build_hypothesis_report(inputs, config.eta);
  } catch (const InvalidArgument& e) {
    p->report_error = e.what();
  }

  const auto [lx, ly] = domain_extent(mesh);
  const int n = mesh.dimension();
  p->u0 = make_preset(config.u0, n, lx, ly);
  p->v0 = make_preset(config.v0, n, lx, ly);
  p->u1 = make_preset(config.u1, n, lx, ly);
  p->v1 = make_preset(config.v1, n, lx, ly);

  p->system = std::make_unique<SemiDiscreteSystem>(std::move(mesh), std::move(partition), config.alpha1,
                                                   config.alpha2, std::move(schedule), std::move(law1),
                                                   std::move(law2), std::move(sigma));
  p->initial = project_initial_data(*p->system, p->u0, p->v0, p->u1, p->v1);
  if (p->initial.compatibility.flagged)
    spdlog::warn("initial data violate the compatibility relations (max residual {:.3e}); run proceeds",
                 p->initial.compatibility.max_abs);

  if (p->report) {
    const auto& r = *p->report;
    p->context.A = r.A;
    p->context.F_coeff = 2.0 * std::sqrt(config.alpha1 * config.alpha2 * n / r.inputs.mu0) * r.inputs.M;
    if (r.rates) {
      p->context.eta = r.rates->eta;
      p->context.eps = r.rates->eta;
    }
  }
  return p;
}

int run_check(const RunConfig& config, std::ostream& out, const std::optional<fs::path>& out_dir) {
  std::unique_ptr<Problem> p;
  try {
    p = build_problem(config);
  } catch (const InadmissiblePartition& e) {
    out << "inadmissible partition: " << e.what() << '\n';
    return kExitInadmissible;
  }
  out << "config_hash " << config.hash << '\n';
  if (!p->report) {
    out << "hypotheses cannot be evaluated: " << p->report_error << '\n';
    out << "admissible 0\n";
    return kExitInadmissible;
  }
  write_report_text(out, *p->report);
  if (out_dir) {
    fs::create_directories(*out_dir);
    std::ofstream csv(*out_dir / config.report_file);
    write_report_csv(csv, *p->report);
  }
  return p->report->admissible ? kExitOk : kExitInadmissible;
}

SimulateOutput simulate(const Problem& p) {
  const auto& cfg = p.config;
  const auto& sys = *p.system;
  SimState state0 = p.initial.state;
  if (!cfg.restart.empty()) {
    std::ifstream in(cfg.restart);
    if (!in) throw ConfigError("cannot open restart checkpoint '" + cfg.restart + "'");
    auto cp = read_checkpoint(in);
    if (cp.state.u.size() != static_cast<Eigen::Index>(sys.mesh().node_count()))
      throw ConfigError("restart checkpoint has a different node count");
    if (!cp.config_hash.empty() && cp.config_hash != cfg.hash)
      spdlog::warn("restart checkpoint was written by a different configuration ({} vs {})", cp.config_hash, cfg.hash);
    state0 = cp.state;
  }
  StepControl control;
  control.dt = cfg.dt;
  control.newton_tol = cfg.newton_tol;
  control.newton_max = cfg.newton_max;
  control.fallback = cfg.fallback;

  SimulateOutput o;
  o.result = run_with_trace(sys, state0, cfg.T, control, p.context);
  auto& meta = o.result.trace.meta;
  meta.config_hash = cfg.hash;
  meta.compat_residual = p.initial.compatibility.max_abs;
  if (p.report) {
    meta.A = p.report->A;
    if (p.report->rates) {
      meta.eta = p.report->rates->eta;
      meta.eps1 = p.report->rates->eps1_max;
      meta.eps2 = p.report->rates->eta;
      meta.S1 = p.report->S1;
      meta.S2 = p.report->S2;
    }
  }

  auto& s = o.summary;
  const auto& samples = o.result.trace.samples;
  s.steps = static_cast<long long>(samples.size()) - 1;
  s.E0 = samples.front().E;
  s.E_final = samples.back().E;
  s.eta = meta.eta;
  s.compat_residual = meta.compat_residual;
  try {
    s.fit = fit_decay_rate(o.result.trace);
  } catch (const FitUndefined& e) {
    spdlog::info("no decay fit: {}", e.what());
  }
  s.violations = count_violations(o.result.trace);
  s.balance_residual = max_abs(energy_balance_residual(o.result.trace));
  if (meta.eps2 && samples.size() > 1) s.lyapunov_excess = lyapunov_decay_excess(o.result.trace, *meta.eps2);
  if (meta.S1 && meta.S2 && samples.size() > 1) s.dG_excess = dG_bound_excess(o.result.trace, *meta.S1, *meta.S2);
  return o;
}

namespace {

void write_summary(std::ostream& out, const RunConfig& cfg, const SimulateSummary& s) {
  out << "config_hash " << cfg.hash << '\n';
  out << "steps " << s.steps << '\n';
  out << "E0 " << num(s.E0) << '\n';
  out << "E_final " << num(s.E_final) << '\n';
  out << "eta " << opt(s.eta) << '\n';
  out << "certified_rate " << (s.eta ? num(2.0 / 3.0 * *s.eta) : std::string("nan")) << '\n';
  out << "fitted_rate " << (s.fit ? num(s.fit->rate) : std::string("nan")) << '\n';
  out << "fit_r2 " << (s.fit ? num(s.fit->r2) : std::string("nan")) << '\n';
  out << "violations " << s.violations.total() << '\n';
  out << "violations_envelope " << s.violations.envelope << '\n';
  out << "violations_sandwich " << s.violations.sandwich_lo + s.violations.sandwich_hi << '\n';
  out << "violations_G " << s.violations.G << '\n';
  out << "violations_F " << s.violations.F << '\n';
  out << "compat_residual " << num(s.compat_residual) << '\n';
  out << "energy_balance_residual " << num(s.balance_residual) << '\n';
  out << "lyapunov_excess " << opt(s.lyapunov_excess) << '\n';
  out << "dG_excess " << opt(s.dG_excess) << '\n';
}

}  // namespace

int run_simulate(const RunConfig& config, std::ostream& out, const fs::path& out_dir, bool plot) {
  std::unique_ptr<Problem> p;
  try {
    p = build_problem(config);
  } catch (const InadmissiblePartition& e) {
    out << "inadmissible partition: " << e.what() << '\n';
    return kExitInadmissible;
  }
  if (p->report && !p->report->admissible)
    spdlog::warn("hypotheses not met; the run has no certified envelope");
  if (!p->report) spdlog::warn("hypotheses cannot be evaluated: {}", p->report_error);

  SimulateOutput o;
  try {
    o = simulate(*p);
  } catch (const StepFailure& e) {
    out << "step failure at t=" << num(e.time()) << " residual " << num(e.residual()) << ": " << e.what() << '\n';
    out << "hint: rerun with a smaller --dt\n";
    return kExitStepFailure;
  }
  fs::create_directories(out_dir);
  {
    std::ofstream f(out_dir / config.trace_file);
    o.result.trace.write_csv(f);
  }
  {
    std::ofstream f(out_dir / config.checkpoint_file);
    write_checkpoint(f, o.result.final_state, config.hash);
  }
  {
    std::ofstream f(out_dir / config.summary_file);
    write_summary(f, config, o.summary);
  }
  if (plot) {
    std::ofstream f(out_dir / config.plot_file);
    write_svg_plot(f, o.result.trace);
  }
  write_summary(out, config, o.summary);
  return kExitOk;
}

namespace {

double max_entry(const SparseMatrix& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

VerifyResult symmetric(const std::string& name, const SparseMatrix& A) {
  const SparseMatrix At = A.transpose();
  const double defect = max_entry(SparseMatrix(A - At));
  const double scale = max_entry(A);
  return {name, defect <= 1e-14 * scale, "asymmetry " + num(defect) + " of max entry " + num(scale)};
}

std::vector<VerifyResult> verify_assembly(const Problem& p, const std::string& fault) {
  std::vector<VerifyResult> r;
  const auto& sys = *p.system;
  SparseMatrix K = sys.stiffness();
  if (fault == "stiffness_symmetry") K.coeffRef(0, 1) += 1e-6 * max_entry(K);
  r.push_back(symmetric("mass_symmetry", sys.mass()));
  r.push_back(symmetric("stiffness_symmetry", K));
  r.push_back(symmetric("sigma_symmetry", sys.sigma_operator()));
  const double total = Vector::Ones(sys.mass().rows()).dot(sys.mass() * Vector::Ones(sys.mass().cols()));
  const double vol = sys.mesh().volume();
  r.push_back({"mass_total", std::abs(total - vol) <= 1e-12 * std::max(1.0, vol),
               "sum " + num(total) + " volume " + num(vol)});
  const SparseMatrix C = sys.coupling();
  const SparseMatrix defect = SparseMatrix(C + SparseMatrix(C.transpose())) - sys.normal_sum_operator();
  r.push_back({"gauss_identity", max_entry(defect) <= 1e-12, "max |C + C' - B| " + num(max_entry(defect))});
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.stiffness_free());
  const bool pd = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0;
  r.push_back({"stiffness_positive", pd, pd ? "LDL' pivots positive" : "nonpositive pivot"});
  return r;
}

MeshSpec coarse_spec(const MeshSpec& base, int level) {
  MeshSpec m = base;
  if (m.kind == "interval") m.nodes = 10 * (1 << level) + 1;
  if (m.kind == "rect") m.nx = m.ny = 4 * (1 << level);
  return m;
}

std::vector<VerifyResult> verify_rellich(const RunConfig& cfg) {
  if (cfg.mesh.kind == "file") return {{"rellich_order", true, "skipped for file meshes"}};
  std::vector<double> err;
  for (int level = 0; level < 3; ++level) {
    const Mesh mesh = build_mesh(coarse_spec(cfg.mesh, level));
    const auto [lx, ly] = domain_extent(mesh);
    const auto u = make_preset({"quadratic", 1.0}, mesh.dimension(), lx, ly);
    err.push_back(std::abs(rellich_check(mesh, u, Point(cfg.x0, mesh.dimension() == 1 ? 0.0 : cfg.y0)).mismatch_standard));
  }
  std::vector<VerifyResult> r;
  for (int k = 0; k + 1 < 3; ++k) {
    const double order = observed_order(err[k], err[k + 1]);
    r.push_back({"rellich_order_" + std::to_string(k), std::abs(order - 2.0) <= 0.3,
                 "mismatch " + num(err[k]) + " -> " + num(err[k + 1]) + ", order " + num(order)});
  }
  return r;
}

std::vector<VerifyResult> verify_strauss(const RunConfig& cfg) {
  LawSpec spec = cfg.law1;
  spec.strauss_level = 0;
  const auto law = make_law(spec);
  std::vector<double> err;
  double min_slope = std::numeric_limits<double>::infinity();
  for (int l : {1, 2, 4, 8, 16}) {
    const auto approx = strauss_approximate(law, l);
    double e = 0.0;
    for (int i = 0; i <= 6000; ++i) {
      const double s = -3.0 + 6.0 * i / 6000.0;
      e = std::max(e, std::abs(approx(s) - law(s)));
    }
    err.push_back(e);
    for (double slope : approx.slopes()) min_slope = std::min(min_slope, slope);
  }
  std::vector<VerifyResult> r;
  const bool exact = *std::max_element(err.begin(), err.end()) <= 1e-14;
  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < err.size(); ++k) decreasing = decreasing && err[k + 1] < err[k];
  r.push_back({"strauss_convergence", exact || decreasing,
               (exact ? "reproduced exactly" : "errors " + num(err.front()) + " ... " + num(err.back()))});
  r.push_back({"strauss_monotone", min_slope >= law.b() - 1e-12, "min slope " + num(min_slope)});
  return r;
}

std::vector<VerifyResult> verify_embedding(const RunConfig& cfg) {
  MeshSpec spec = cfg.mesh.kind == "file" ? cfg.mesh : coarse_spec(cfg.mesh, 2);
  const Mesh mesh = build_mesh(spec);
  const auto part = classify_boundary(mesh, Point(cfg.x0, mesh.dimension() == 1 ? 0.0 : cfg.y0));
  const auto emb = embedding_constants(mesh, part);
  const auto free = part.free_nodes();
  const Eigen::MatrixXd K = Eigen::MatrixXd(fem::restrict_matrix(fem::assemble_stiffness(mesh), free));
  const Eigen::MatrixXd Mm = Eigen::MatrixXd(fem::restrict_matrix(fem::assemble_mass(mesh), free));
  const Eigen::MatrixXd B = Eigen::MatrixXd(fem::restrict_matrix(
      fem::assemble_boundary_mass(
          mesh, [&](std::size_t f) { return part.on_gamma1(f); }, [](std::size_t, std::size_t) { return 1.0; }),
      free));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gm(K, Mm);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gn(B, K);
  const double M = 1.0 / std::sqrt(gm.eigenvalues().minCoeff());
  const double N = std::sqrt(gn.eigenvalues().maxCoeff());
  return {{"embedding_M", std::abs(emb.M - M) <= 1e-8 * M, "iterated " + num(emb.M) + " dense " + num(M)},
          {"embedding_N", std::abs(emb.N - N) <= 1e-8 * N, "iterated " + num(emb.N) + " dense " + num(N)}};
}

// Decoupled wave system with identity feedback on a small interval: self-convergence in dt.
std::vector<VerifyResult> verify_convergence() {
  const Mesh mesh = build_interval_mesh(1.0, 21);
  const auto part = classify_boundary(mesh, Point(0.0, 0.0));
  const SemiDiscreteSystem sys(mesh, part, 0.0, 0.0, CoefficientSchedule::constant(1.0), identity_law(),
                               identity_law(), zero_sigma(mesh, part));
  const auto u0 = make_preset({"sine", 1.0}, 1, 1.0);
  const auto z = make_preset({"zero", 1.0}, 1, 1.0);
  const auto init = project_initial_data(sys, u0, u0, z, z);
  const double T = 0.5;
  auto run = [&](double dt) {
    StepControl c;
    c.dt = dt;
    return integrate(sys, init.state, T, c);
  };
  const SimState ref = run(0.005 / 256);
  std::vector<double> err;
  for (double dt : {0.005, 0.0025, 0.00125, 0.000625}) {
    const SimState s = run(dt);
    err.push_back(std::max((s.u - ref.u).lpNorm<Eigen::Infinity>(), (s.du - ref.du).lpNorm<Eigen::Infinity>()));
  }
  std::vector<VerifyResult> r;
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double order = observed_order(err[k], err[k + 1]);
    r.push_back({"timestep_order_" + std::to_string(k), std::abs(order - 2.0) <= 0.2, "order " + num(order)});
  }
  return r;
}

std::vector<VerifyResult> verify_energy() {
  const Mesh mesh = build_interval_mesh(1.0, 21);
  const auto part = classify_boundary(mesh, Point(0.0, 0.0));
  const SemiDiscreteSystem sys(mesh, part, 0.0, 0.0, CoefficientSchedule::constant(1.0), zero_law(), zero_law(),
                               zero_sigma(mesh, part));
  const auto u0 = make_preset({"sine", 1.0}, 1, 1.0);
  const auto v1 = make_preset({"linear", 0.5}, 1, 1.0);
  const auto z = make_preset({"zero", 1.0}, 1, 1.0);
  const auto init = project_initial_data(sys, u0, z, z, v1);
  StepControl c;
  c.dt = 1e-3;
  const double E0 = energy(sys, init.state);
  double drift = 0.0;
  (void)integrate(sys, init.state, 1.0, c, {[&](const SimState& s) {
                    drift = std::max(drift, std::abs(energy(sys, s) - E0) / E0);
                  }});
  return {{"conservative_energy_drift", drift <= 1e-10, "max relative drift " + num(drift)}};
}

}  // namespace

std::vector<VerifyResult> verify_suites(const RunConfig& config) {
  std::vector<VerifyResult> all;
  auto append = [&all](std::vector<VerifyResult> r) { all.insert(all.end(), r.begin(), r.end()); };
  for (const auto& suite : config.verify.suites) {
    if (suite == "assembly") append(verify_assembly(*build_problem(config), config.verify.inject_fault));
    else if (suite == "rellich") append(verify_rellich(config));
    else if (suite == "strauss") append(verify_strauss(config));
    else if (suite == "embedding") append(verify_embedding(config));
    else if (suite == "convergence") append(verify_convergence());
    else if (suite == "energy") append(verify_energy());
  }
  return all;
}

int run_verify(const RunConfig& config, std::ostream& out) {
  if (config.verify.suites.empty()) {
    out << "no verification suites selected\n";
    return kExitUsage;
  }
  const auto results = verify_suites(config);
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  out << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
  return ok ? kExitOk : kExitFailed;
}

std::vector<SweepRow> sweep(const RunConfig& config) {
  const std::vector<double> alphas = config.sweep.alpha.empty() ? std::vector<double>{config.alpha1}
                                                                : config.sweep.alpha;
  const std::vector<std::string> laws = config.sweep.laws.empty() ? std::vector<std::string>{config.law1.kind}
                                                                  : config.sweep.laws;
  std::vector<RunConfig> points;
  for (double a : alphas) {
    for (const auto& law : laws) {
      RunConfig c = config;
      c.alpha1 = a;
      c.alpha2 = a;
      c.law1.kind = law;
      c.law2.kind = law;
      points.push_back(std::move(c));
    }
  }
  auto evaluate = [&config](std::size_t index, const RunConfig& c) {
    SweepRow row;
    row.index = index;
    row.alpha1 = c.alpha1;
    row.alpha2 = c.alpha2;
    row.law = c.law1.kind;
    try {
      const auto p = build_problem(c);
      row.admissible = p->report && p->report->admissible;
      if (p->report && p->report->rates) row.eta = p->report->rates->eta;
      if (!row.admissible) {
        row.note = p->report ? "inadmissible; not simulated" : p->report_error;
        return row;
      }
      if (config.sweep.simulate) {
        const auto o = simulate(*p);
        if (o.summary.fit) row.fitted_rate = o.summary.fit->rate;
        row.violations = o.summary.violations.total();
      }
    } catch (const StepFailure& e) {
      row.note = std::string("step failure: ") + e.what();
    } catch (const InadmissiblePartition& e) {
      row.note = std::string("inadmissible partition: ") + e.what();
    }
    return row;
  };

  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepRow> rows;
  for (std::size_t start = 0; start < points.size(); start += workers) {
    std::vector<std::future<SweepRow>> batch;
    for (std::size_t i = start; i < std::min(points.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, evaluate, i, std::cref(points[i])));
    for (auto& f : batch) rows.push_back(f.get());
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.index < b.index; });
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "index,alpha1,alpha2,law,admissible,eta,fitted_rate,violations,note\n";
  for (const auto& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), '"', '\'');
    out << r.index << ',' << num(r.alpha1) << ',' << num(r.alpha2) << ',' << r.law << ',' << (r.admissible ? 1 : 0)
        << ',' << opt(r.eta) << ',' << opt(r.fitted_rate) << ',' << r.violations << ",\"" << note << "\"\n";
  }
}

int run_sweep(const RunConfig& config, std::ostream& out, const std::optional<fs::path>& out_dir) {
  const auto rows = sweep(config);
  write_sweep_csv(out, rows);
  if (out_dir) {
    fs::create_directories(*out_dir);
    std::ofstream f(*out_dir / "sweep.csv");
    write_sweep_csv(f, rows);
  }
  return kExitOk;
}

int run_fit(const fs::path& trace_path, std::optional<double> t_a, std::optional<double> t_b, std::ostream& out) {
  std::ifstream in(trace_path);
  if (!in) throw ConfigError("cannot open trace '" + trace_path.string() + "'");
  const auto trace = read_trace_csv(in);
  if (trace.samples.empty()) throw FitUndefined("trace has no samples");
  const double t0 = trace.samples.front().t;
  const double T = trace.samples.back().t;
  const double a = t_a.value_or(t0 + 0.2 * (T - t0));
  const double b = t_b.value_or(T);
  const auto fit = fit_decay_rate(trace, a, b);
  out << "window " << num(a) << ' ' << num(b) << '\n';
  out << "samples " << fit.samples << '\n';
  out << "rate " << num(fit.rate) << '\n';
  out << "intercept " << num(fit.intercept) << '\n';
  out << "r2 " << num(fit.r2) << '\n';
  if (trace.meta.eta) {
    const double certified = 2.0 / 3.0 * *trace.meta.eta;
    out << "certified_rate " << num(certified) << '\n';
    out << "rate_meets_certificate " << (fit.rate >= certified ? 1 : 0) << '\n';
  }
  return kExitOk;
}

}  // namespace timostab
