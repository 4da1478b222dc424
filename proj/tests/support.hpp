#pragma once

// Small builders shared by the test binaries.

#include <cmath>

#include "timostab/discretization.hpp"
#include "timostab/fields.hpp"

namespace testing_support {

using namespace timostab;

inline SemiDiscreteSystem interval_system(int nodes, double alpha1, double alpha2, const FeedbackLaw& law1,
                                          const FeedbackLaw& law2, bool sigma = true, double x0 = 0.0,
                                          double length = 1.0,
                                          const CoefficientSchedule& schedule = CoefficientSchedule::constant(1.0)) {
  auto mesh = build_interval_mesh(length, nodes);
  auto part = classify_boundary(mesh, Point(x0, 0.0));
  auto s = sigma ? sigma_from_mesh(mesh, part, alpha2) : zero_sigma(mesh, part);
  return assemble(mesh, part, alpha1, alpha2, schedule, law1, law2, s);
}

inline SemiDiscreteSystem rect_system(int cells, double alpha1, double alpha2, const FeedbackLaw& law1,
                                      const FeedbackLaw& law2, bool sigma = true) {
  auto mesh = build_rect_mesh(1.0, 1.0, cells, cells);
  auto part = classify_boundary(mesh, Point(-0.1, -0.1));
  auto s = sigma ? sigma_from_mesh(mesh, part, alpha2) : zero_sigma(mesh, part);
  return assemble(mesh, part, alpha1, alpha2, CoefficientSchedule::constant(1.0), law1, law2, s);
}

inline SimState preset_state(const SemiDiscreteSystem& sys, const char* u0, const char* v0, const char* u1,
                             const char* v1) {
  const int n = sys.dimension();
  auto f = [&](const char* s) { return make_preset(parse_preset(s), n, 1.0, 1.0); };
  return project_initial_data(sys, f(u0), f(v0), f(u1), f(v1)).state;
}

inline double max_abs_dense(const SparseMatrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace testing_support
