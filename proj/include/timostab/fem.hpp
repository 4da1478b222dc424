#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "timostab/geometry.hpp"

namespace timostab::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct GaussRule {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule with 1 to 5 points.
GaussRule gauss_legendre(int count);

/// Shape values and physical gradients of the element basis at one quadrature
/// point; weight already contains |det J|.
struct ElementSample {
  Point x;
  std::array<Point, 4> grad{};
  std::array<double, 4> shape{};
  double weight = 0.0;
};

std::vector<ElementSample> element_samples(const Mesh& mesh, std::size_t element, int points_per_direction);

/// Gradient of the nodal field `values` at a sample of `element`.
Point field_gradient(const Mesh& mesh, std::size_t element, const ElementSample& sample,
                     const Vector& values);
double field_value(const Mesh& mesh, std::size_t element, const ElementSample& sample, const Vector& values);

SparseMatrix assemble_mass(const Mesh& mesh);
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// C(k, j) = (sum_i d(phi_j)/dx_i, phi_k).
SparseMatrix assemble_coupling(const Mesh& mesh);

/// B(k, j) = sum over selected faces and quadrature points of w * c * phi_j * phi_k,
/// with c = coefficient(face, quadrature index).
SparseMatrix assemble_boundary_mass(const Mesh& mesh, const std::function<bool(std::size_t)>& face_selected,
                                    const std::function<double(std::size_t, std::size_t)>& coefficient);

/// Rows and columns of `full` restricted to `indices` (in order).
SparseMatrix restrict_matrix(const SparseMatrix& full, const std::vector<int>& indices);

}  // namespace timostab::fem
