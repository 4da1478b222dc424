#include "timostab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "timostab/errors.hpp"

namespace timostab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"mesh", {"kind", "length", "nodes", "lx", "ly", "nx", "ny", "file"}},
      {"geometry", {"x0", "y0"}},
      {"coupling", {"alpha1", "alpha2", "sigma"}},
      {"coefficient", {"kind", "value", "start", "floor", "rate"}},
      {"law1", {"kind", "k", "b", "L", "knee", "c", "strauss_level"}},
      {"law2", {"kind", "k", "b", "L", "knee", "c", "strauss_level"}},
      {"initial", {"u0", "v0", "u1", "v1"}},
      {"time", {"dt", "T", "newton_tol", "newton_max", "fallback", "restart"}},
      {"hypothesis", {"eta"}},
      {"output", {"trace", "checkpoint", "summary", "report", "plot"}},
      {"sweep", {"alpha", "laws", "simulate"}},
      {"verify", {"suites", "inject_fault"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw ConfigError(where + ": expected a finite number, got '" + text + "'");
  return v;
}

int to_int(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) throw ConfigError(where + ": expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(where + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <typename F>
  void with(const std::string& section, const std::string& key, F apply) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return;
    const auto value = sec->get_optional<std::string>(key);
    if (value) apply(section + "." + key, *value);
  }

  void number(const std::string& s, const std::string& k, double& out) const {
    with(s, k, [&](const std::string& w, const std::string& v) { out = to_double(w, v); });
  }
  void integer(const std::string& s, const std::string& k, int& out) const {
    with(s, k, [&](const std::string& w, const std::string& v) { out = to_int(w, v); });
  }
  void flag(const std::string& s, const std::string& k, bool& out) const {
    with(s, k, [&](const std::string& w, const std::string& v) { out = to_bool(w, v); });
  }
  void text(const std::string& s, const std::string& k, std::string& out) const {
    with(s, k, [&](const std::string&, const std::string& v) { out = trim(v); });
  }
  bool has(const std::string& s, const std::string& k) const {
    const auto sec = tree_.get_child_optional(s);
    return sec && sec->get_optional<std::string>(k);
  }

private:
  const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      if (!value.empty()) throw ConfigError("nested keys are not supported: " + section + "." + key);
    }
  }
}

LawSpec read_law(const Reader& r, const std::string& section) {
  LawSpec law;
  r.text(section, "kind", law.kind);
  r.number(section, "k", law.k);
  r.number(section, "b", law.b);
  r.number(section, "L", law.L);
  r.number(section, "knee", law.knee);
  r.number(section, "c", law.c);
  r.integer(section, "strauss_level", law.strauss_level);
  try {
    (void)make_law(law);
  } catch (const InvalidArgument& e) {
    throw ConfigError("[" + section + "]: " + e.what());
  }
  return law;
}

PresetSpec read_preset(const Reader& r, const std::string& key, PresetSpec fallback) {
  PresetSpec p = fallback;
  r.with("initial", key, [&](const std::string& w, const std::string& v) {
    try {
      p = parse_preset(trim(v));
    } catch (const InvalidArgument& e) {
      throw ConfigError(w + ": " + e.what());
    }
  });
  return p;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void add_law(std::vector<std::string>& out, const std::string& sec, const LawSpec& l) {
  out.push_back(sec + ".kind=" + l.kind);
  out.push_back(sec + ".k=" + num(l.k));
  out.push_back(sec + ".b=" + num(l.b));
  out.push_back(sec + ".L=" + num(l.L));
  out.push_back(sec + ".knee=" + num(l.knee));
  out.push_back(sec + ".c=" + num(l.c));
  out.push_back(sec + ".strauss_level=" + std::to_string(l.strauss_level));
}

std::vector<std::string> canonical_lines(const RunConfig& c) {
  std::vector<std::string> out;
  const auto& m = c.mesh;
  out.push_back("mesh.kind=" + m.kind);
  if (m.kind == "interval") {
    out.push_back("mesh.length=" + num(m.length));
    out.push_back("mesh.nodes=" + std::to_string(m.nodes));
  } else if (m.kind == "rect") {
    out.push_back("mesh.lx=" + num(m.lx));
    out.push_back("mesh.ly=" + num(m.ly));
    out.push_back("mesh.nx=" + std::to_string(m.nx));
    out.push_back("mesh.ny=" + std::to_string(m.ny));
  } else {
    out.push_back("mesh.file=" + m.file);
  }
  out.push_back("geometry.x0=" + num(c.x0));
  out.push_back("geometry.y0=" + num(c.y0));
  out.push_back("coupling.alpha1=" + num(c.alpha1));
  out.push_back("coupling.alpha2=" + num(c.alpha2));
  out.push_back("coupling.sigma=" + c.sigma);
  out.push_back("coefficient.kind=" + c.schedule.kind);
  if (c.schedule.kind == "constant") {
    out.push_back("coefficient.value=" + num(c.schedule.value));
  } else {
    out.push_back("coefficient.start=" + num(c.schedule.start));
    out.push_back("coefficient.floor=" + num(c.schedule.floor));
    out.push_back("coefficient.rate=" + num(c.schedule.rate));
  }
  add_law(out, "law1", c.law1);
  add_law(out, "law2", c.law2);
  out.push_back("initial.u0=" + to_string(c.u0));
  out.push_back("initial.v0=" + to_string(c.v0));
  out.push_back("initial.u1=" + to_string(c.u1));
  out.push_back("initial.v1=" + to_string(c.v1));
  out.push_back("time.dt=" + num(c.dt));
  out.push_back("time.newton_tol=" + num(c.newton_tol));
  out.push_back("time.newton_max=" + std::to_string(c.newton_max));
  out.push_back("time.fallback=" + std::string(c.fallback ? "true" : "false"));
  if (c.eta) out.push_back("hypothesis.eta=" + num(*c.eta));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

RunConfig parse_config(std::istream& in, const ConfigOverrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  check_schema(tree);
  const Reader r(tree);
  RunConfig c;

  r.text("mesh", "kind", c.mesh.kind);
  r.number("mesh", "length", c.mesh.length);
  r.integer("mesh", "nodes", c.mesh.nodes);
  r.number("mesh", "lx", c.mesh.lx);
  r.number("mesh", "ly", c.mesh.ly);
  r.integer("mesh", "nx", c.mesh.nx);
  r.integer("mesh", "ny", c.mesh.ny);
  r.text("mesh", "file", c.mesh.file);
  r.number("geometry", "x0", c.x0);
  r.number("geometry", "y0", c.y0);
  r.number("coupling", "alpha1", c.alpha1);
  r.number("coupling", "alpha2", c.alpha2);
  r.text("coupling", "sigma", c.sigma);
  r.text("coefficient", "kind", c.schedule.kind);
  r.number("coefficient", "value", c.schedule.value);
  r.number("coefficient", "start", c.schedule.start);
  r.number("coefficient", "floor", c.schedule.floor);
  r.number("coefficient", "rate", c.schedule.rate);
  c.law1 = read_law(r, "law1");
  c.law2 = read_law(r, "law2");
  c.u0 = read_preset(r, "u0", c.u0);
  c.v0 = read_preset(r, "v0", c.v0);
  c.u1 = read_preset(r, "u1", c.u1);
  c.v1 = read_preset(r, "v1", c.v1);
  r.number("time", "dt", c.dt);
  r.number("time", "T", c.T);
  r.number("time", "newton_tol", c.newton_tol);
  r.integer("time", "newton_max", c.newton_max);
  r.flag("time", "fallback", c.fallback);
  r.text("time", "restart", c.restart);
  if (r.has("hypothesis", "eta")) {
    double eta = 0.0;
    r.number("hypothesis", "eta", eta);
    c.eta = eta;
  }
  r.text("output", "trace", c.trace_file);
  r.text("output", "checkpoint", c.checkpoint_file);
  r.text("output", "summary", c.summary_file);
  r.text("output", "report", c.report_file);
  r.text("output", "plot", c.plot_file);
  r.with("sweep", "alpha", [&](const std::string& w, const std::string& v) {
    for (const auto& item : split_list(v)) c.sweep.alpha.push_back(to_double(w, item));
  });
  r.with("sweep", "laws", [&](const std::string&, const std::string& v) { c.sweep.laws = split_list(v); });
  r.flag("sweep", "simulate", c.sweep.simulate);
  if (r.has("verify", "suites")) {
    r.with("verify", "suites", [&](const std::string&, const std::string& v) { c.verify.suites = split_list(v); });
  } else {
    c.verify.suites = {"assembly", "rellich", "strauss", "embedding", "convergence", "energy"};
  }
  r.text("verify", "inject_fault", c.verify.inject_fault);

  if (overrides.dt) c.dt = *overrides.dt;
  if (overrides.T) c.T = *overrides.T;
  require(overrides.refine >= 0, "--refine must be >= 0");
  for (int k = 0; k < overrides.refine; ++k) {
    c.mesh.nodes = 2 * c.mesh.nodes - 1;
    c.mesh.nx *= 2;
    c.mesh.ny *= 2;
    c.dt *= 0.5;
  }

  const auto& m = c.mesh;
  require(m.kind == "interval" || m.kind == "rect" || m.kind == "file", "mesh.kind must be interval, rect or file");
  if (m.kind == "interval") require(m.length > 0.0 && m.nodes >= 3, "interval mesh needs length > 0 and nodes >= 3");
  if (m.kind == "rect") require(m.lx > 0.0 && m.ly > 0.0 && m.nx >= 2 && m.ny >= 2, "rect mesh needs lx, ly > 0 and nx, ny >= 2");
  if (m.kind == "file") require(!m.file.empty(), "mesh.file is required for kind = file");
  require(c.alpha1 >= 0.0 && c.alpha2 >= 0.0, "coupling.alpha1 and alpha2 must be >= 0");
  require(c.sigma == "normal_sum" || c.sigma == "zero", "coupling.sigma must be normal_sum or zero");
  const auto& s = c.schedule;
  require(s.kind == "constant" || s.kind == "decaying", "coefficient.kind must be constant or decaying");
  if (s.kind == "constant") require(s.value > 0.0, "coefficient.value must be positive");
  if (s.kind == "decaying")
    require(s.floor > 0.0 && s.start >= s.floor && s.rate >= 0.0,
            "decaying coefficient needs start >= floor > 0 and rate >= 0 (nonincreasing)");
  require(c.dt > 0.0, "time.dt must be positive");
  require(c.T > 0.0, "time.T must be positive");
  require(c.newton_tol > 0.0, "time.newton_tol must be positive");
  require(c.newton_max >= 1, "time.newton_max must be >= 1");
  if (c.eta) require(*c.eta > 0.0, "hypothesis.eta must be positive");
  for (double a : c.sweep.alpha) require(a > 0.0, "sweep.alpha values must be positive");
  for (const auto& law : c.sweep.laws) {
    LawSpec l = c.law1;
    l.kind = law;
    try {
      (void)make_law(l);
    } catch (const InvalidArgument& e) {
      throw ConfigError("sweep.laws: " + std::string(e.what()));
    }
  }
  static const std::set<std::string> suites = {"assembly", "rellich", "strauss", "embedding", "convergence", "energy"};
  for (const auto& name : c.verify.suites) require(suites.count(name) > 0, "unknown verify suite '" + name + "'");
  require(c.verify.inject_fault == "none" || c.verify.inject_fault == "stiffness_symmetry",
          "verify.inject_fault must be none or stiffness_symmetry");

  c.canonical = canonical_lines(c);
  std::string joined;
  for (const auto& line : c.canonical) joined += line + '\n';
  c.hash = fnv1a_hex(joined);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in, overrides);
}

}  // namespace timostab
