#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace timostab {

/// Spatial point. The second component is unused (kept at 0) for 1D meshes.
using Point = Eigen::Vector2d;

/// Quadrature point on a boundary face, with the face-local shape values of
/// the face nodes (one node in 1D, two in 2D).
struct FaceQuadPoint {
  Point x;
  std::array<double, 2> shape{};
  double weight = 0.0;
};

struct BoundaryFace {
  std::array<int, 2> nodes{};
  Point normal;
  Point centroid;
  double measure = 0.0;
  std::vector<FaceQuadPoint> quadrature;
};

/// Conforming mesh of 2-node segments (n = 1) or 4-node bilinear quadrilaterals
/// (n = 2, counterclockwise node order). Validated on construction.
class Mesh {
public:
  Mesh(int dimension, std::vector<Point> nodes, std::vector<std::array<int, 4>> elements,
       std::vector<BoundaryFace> faces);

  int dimension() const noexcept { return dimension_; }
  int nodes_per_element() const noexcept { return dimension_ == 1 ? 2 : 4; }
  int nodes_per_face() const noexcept { return dimension_ == 1 ? 1 : 2; }

  std::span<const Point> nodes() const noexcept { return nodes_; }
  std::span<const std::array<int, 4>> elements() const noexcept { return elements_; }
  std::span<const BoundaryFace> faces() const noexcept { return faces_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t element_count() const noexcept { return elements_.size(); }
  std::size_t face_count() const noexcept { return faces_.size(); }

  double element_volume(std::size_t e) const { return volumes_.at(e); }
  double volume() const;
  double boundary_measure() const;

  /// Builds face centroid, measure and quadrature from node coordinates.
  static BoundaryFace make_face(int dimension, std::span<const Point> nodes, std::array<int, 2> face_nodes,
                                const Point& normal);

private:
  void validate();

  int dimension_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 4>> elements_;
  std::vector<BoundaryFace> faces_;
  std::vector<double> volumes_;
};

enum class BoundaryTag { Gamma0, Gamma1 };

/// Split of the boundary by the sign of m(x).nu(x), m(x) = x - x0.
struct BoundaryPartition {
  Point x0;
  std::vector<BoundaryTag> tags;                 // per face
  std::vector<double> centroid_m_dot_nu;         // per face
  std::vector<std::vector<double>> m_dot_nu;     // per face, per quadrature point
  std::vector<bool> constrained;                 // per node: lies on a Gamma0 face

  bool on_gamma1(std::size_t face) const { return tags.at(face) == BoundaryTag::Gamma1; }
  std::vector<int> gamma1_faces() const;
  std::vector<int> free_nodes() const;
};

struct GeometricConstants {
  double R = 0.0;
  double tau0 = 0.0;
  double M = 0.0;
  double N = 0.0;
  double mu0 = 0.0;
};

struct ShapeConstants {
  double R = 0.0;
  double tau0 = 0.0;
};

struct EmbeddingConstants {
  double M = 0.0;
  double N = 0.0;
  int iterations_M = 0;
  int iterations_N = 0;
};

struct EigenIterationControl {
  double relative_residual = 1e-10;
  int max_iterations = 100000;
};

Mesh build_interval_mesh(double length, int node_count);
Mesh build_rect_mesh(double lx, double ly, int nx, int ny);

BoundaryPartition classify_boundary(const Mesh& mesh, const Point& x0);

ShapeConstants geometric_constants(const Mesh& mesh, const BoundaryPartition& partition);

/// Discrete Poincare constant M = 1/sqrt(lambda_min(K, M)) and trace constant
/// N = sqrt(mu_max(B_Gamma1, K)) on the space of P1/Q1 functions vanishing on Gamma0.
EmbeddingConstants embedding_constants(const Mesh& mesh, const BoundaryPartition& partition,
                                       const EigenIterationControl& control = {});

/// max over Gamma1 quadrature points of |sum_i nu_i|.
double normal_sum_bound(const Mesh& mesh, const BoundaryPartition& partition);

/// Text mesh format, see README ("Mesh files").
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

/// CSV: face_id,centroid_x,centroid_y,m_dot_nu,tag
void write_partition_csv(std::ostream& out, const Mesh& mesh, const BoundaryPartition& partition);

std::string to_string(BoundaryTag tag);

}  // namespace timostab
