#pragma once

#include <functional>
#include <string>

#include "timostab/geometry.hpp"

namespace timostab {

/// Closed-form scalar field with its gradient and Laplacian.
struct AnalyticField {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<double(const Point&)> laplacian;
};

/// Named preset with amplitude, written "name" or "name:amplitude" in configs.
struct PresetSpec {
  std::string name = "zero";
  double amplitude = 1.0;
};

PresetSpec parse_preset(const std::string& text);
std::string to_string(const PresetSpec& spec);

/// Presets on the box [0, lx] x [0, ly] (ly ignored when dimension == 1):
///   zero       0
///   sine       a * prod_i sin(pi x_i / (2 l_i))   (vanishes on x_i = 0, flat at x_i = l_i)
///   linear     a * sum_i x_i
///   quadratic  a * sum_i x_i^2
AnalyticField make_preset(const PresetSpec& spec, int dimension, double lx, double ly = 1.0);

}  // namespace timostab
