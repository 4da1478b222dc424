#include "timostab/fem.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "timostab/errors.hpp"

namespace timostab::fem {

GaussRule gauss_legendre(int count) {
  switch (count) {
    case 1:
      return {{0.0}, {2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a}, {1.0, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    case 5: {
      const double a = 1.0 / 3.0 * std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0));
      const double b = 1.0 / 3.0 * std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0));
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      return {{-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb}};
    }
    default:
      throw InvalidArgument("gauss_legendre: supported point counts are 1..5");
  }
}

namespace {

constexpr std::array<double, 4> kQuadXi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kQuadEta{-1.0, -1.0, 1.0, 1.0};

}  // namespace

std::vector<ElementSample> element_samples(const Mesh& mesh, std::size_t element, int points_per_direction) {
  const auto rule = gauss_legendre(points_per_direction);
  const auto& conn = mesh.elements()[element];
  const auto nodes = mesh.nodes();
  std::vector<ElementSample> samples;

  if (mesh.dimension() == 1) {
    const Point& a = nodes[conn[0]];
    const Point& b = nodes[conn[1]];
    const double length = b.x() - a.x();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double xi = rule.points[q];
      ElementSample s;
      s.shape[0] = 0.5 * (1.0 - xi);
      s.shape[1] = 0.5 * (1.0 + xi);
      s.x = s.shape[0] * a + s.shape[1] * b;
      s.weight = rule.weights[q] * 0.5 * std::abs(length);
      s.grad[0] = Point(-1.0 / length, 0.0);
      s.grad[1] = Point(1.0 / length, 0.0);
      samples.push_back(s);
    }
    return samples;
  }

  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
      const double xi = rule.points[i];
      const double eta = rule.points[j];
      ElementSample s;
      std::array<Eigen::Vector2d, 4> dref;
      Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();
      s.x = Point::Zero();
      for (int a = 0; a < 4; ++a) {
        s.shape[a] = 0.25 * (1.0 + xi * kQuadXi[a]) * (1.0 + eta * kQuadEta[a]);
        dref[a] = Eigen::Vector2d(0.25 * kQuadXi[a] * (1.0 + eta * kQuadEta[a]),
                                  0.25 * kQuadEta[a] * (1.0 + xi * kQuadXi[a]));
        const Point& xa = nodes[conn[a]];
        s.x += s.shape[a] * xa;
        jac.col(0) += xa * dref[a].x();
        jac.col(1) += xa * dref[a].y();
      }
      const double det = jac.determinant();
      const Eigen::Matrix2d inv_t = jac.inverse().transpose();
      for (int a = 0; a < 4; ++a) s.grad[a] = inv_t * dref[a];
      s.weight = rule.weights[i] * rule.weights[j] * std::abs(det);
      samples.push_back(s);
    }
  }
  return samples;
}

Point field_gradient(const Mesh& mesh, std::size_t element, const ElementSample& sample, const Vector& values) {
  const auto& conn = mesh.elements()[element];
  Point g = Point::Zero();
  for (int a = 0; a < mesh.nodes_per_element(); ++a) g += values[conn[a]] * sample.grad[a];
  return g;
}

double field_value(const Mesh& mesh, std::size_t element, const ElementSample& sample, const Vector& values) {
  const auto& conn = mesh.elements()[element];
  double v = 0.0;
  for (int a = 0; a < mesh.nodes_per_element(); ++a) v += values[conn[a]] * sample.shape[a];
  return v;
}

namespace {

template <typename Kernel>
SparseMatrix assemble_volume(const Mesh& mesh, Kernel kernel) {
  const int npe = mesh.nodes_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.element_count() * npe * npe);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& conn = mesh.elements()[e];
    Eigen::Matrix4d local = Eigen::Matrix4d::Zero();
    for (const auto& s : element_samples(mesh, e, 3)) {
      for (int k = 0; k < npe; ++k)
        for (int j = 0; j < npe; ++j) local(k, j) += s.weight * kernel(s, k, j);
    }
    for (int k = 0; k < npe; ++k)
      for (int j = 0; j < npe; ++j) triplets.emplace_back(conn[k], conn[j], local(k, j));
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

SparseMatrix assemble_mass(const Mesh& mesh) {
  return assemble_volume(mesh, [](const ElementSample& s, int k, int j) { return s.shape[k] * s.shape[j]; });
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble_volume(mesh, [](const ElementSample& s, int k, int j) { return s.grad[k].dot(s.grad[j]); });
}

SparseMatrix assemble_coupling(const Mesh& mesh) {
  const int dim = mesh.dimension();
  return assemble_volume(mesh, [dim](const ElementSample& s, int k, int j) {
    double div = s.grad[j].x();
    if (dim == 2) div += s.grad[j].y();
    return div * s.shape[k];
  });
}

SparseMatrix assemble_boundary_mass(const Mesh& mesh, const std::function<bool(std::size_t)>& face_selected,
                                    const std::function<double(std::size_t, std::size_t)>& coefficient) {
  const int npf = mesh.nodes_per_face();
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (!face_selected(f)) continue;
    const auto& face = mesh.faces()[f];
    for (std::size_t q = 0; q < face.quadrature.size(); ++q) {
      const auto& qp = face.quadrature[q];
      const double c = qp.weight * coefficient(f, q);
      for (int k = 0; k < npf; ++k)
        for (int j = 0; j < npf; ++j)
          triplets.emplace_back(face.nodes[k], face.nodes[j], c * qp.shape[k] * qp.shape[j]);
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix restrict_matrix(const SparseMatrix& full, const std::vector<int>& indices) {
  std::vector<int> position(static_cast<std::size_t>(full.rows()), -1);
  for (std::size_t i = 0; i < indices.size(); ++i) position[indices[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int col = 0; col < full.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const int r = position[it.row()];
      const int c = position[it.col()];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(indices.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace timostab::fem
