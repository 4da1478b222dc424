#include "timostab/fields.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "timostab/errors.hpp"

namespace timostab {

PresetSpec parse_preset(const std::string& text) {
  PresetSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) {
    const std::string amp = text.substr(colon + 1);
    std::size_t used = 0;
    try {
      spec.amplitude = std::stod(amp, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != amp.size()) throw InvalidArgument("bad preset amplitude in '" + text + "'");
  }
  if (spec.name != "zero" && spec.name != "sine" && spec.name != "linear" && spec.name != "quadratic")
    throw InvalidArgument("unknown field preset '" + spec.name + "'");
  return spec;
}

std::string to_string(const PresetSpec& spec) {
  std::ostringstream s;
  s << std::setprecision(17) << spec.name << ':' << spec.amplitude;
  return s.str();
}

AnalyticField make_preset(const PresetSpec& spec, int dimension, double lx, double ly) {
  if (dimension != 1 && dimension != 2) throw InvalidArgument("preset dimension must be 1 or 2");
  const double a = spec.amplitude;
  const bool two = dimension == 2;
  AnalyticField f;
  f.name = to_string(spec);
  if (spec.name == "zero") {
    f.value = [](const Point&) { return 0.0; };
    f.gradient = [](const Point&) { return Point(0.0, 0.0); };
    f.laplacian = [](const Point&) { return 0.0; };
  } else if (spec.name == "sine") {
    const double kx = std::numbers::pi / (2.0 * lx);
    const double ky = std::numbers::pi / (2.0 * ly);
    f.value = [=](const Point& x) {
      return a * std::sin(kx * x.x()) * (two ? std::sin(ky * x.y()) : 1.0);
    };
    f.gradient = [=](const Point& x) {
      const double sy = two ? std::sin(ky * x.y()) : 1.0;
      const double gy = two ? a * std::sin(kx * x.x()) * ky * std::cos(ky * x.y()) : 0.0;
      return Point(a * kx * std::cos(kx * x.x()) * sy, gy);
    };
    f.laplacian = [=](const Point& x) {
      const double k2 = kx * kx + (two ? ky * ky : 0.0);
      return -k2 * a * std::sin(kx * x.x()) * (two ? std::sin(ky * x.y()) : 1.0);
    };
  } else if (spec.name == "linear") {
    f.value = [=](const Point& x) { return a * (x.x() + (two ? x.y() : 0.0)); };
    f.gradient = [=](const Point&) { return Point(a, two ? a : 0.0); };
    f.laplacian = [](const Point&) { return 0.0; };
  } else if (spec.name == "quadratic") {
    f.value = [=](const Point& x) { return a * (x.x() * x.x() + (two ? x.y() * x.y() : 0.0)); };
    f.gradient = [=](const Point& x) { return Point(2.0 * a * x.x(), two ? 2.0 * a * x.y() : 0.0); };
    f.laplacian = [=](const Point&) { return 2.0 * a * (two ? 2.0 : 1.0); };
  } else {
    throw InvalidArgument("unknown field preset '" + spec.name + "'");
  }
  return f;
}

}  // namespace timostab
