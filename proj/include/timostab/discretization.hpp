#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "timostab/feedback.hpp"
#include "timostab/fields.hpp"
#include "timostab/geometry.hpp"
#include "timostab/hypothesis.hpp"

namespace timostab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// One Gamma1 boundary quadrature point. `weight` is the plain surface weight,
/// `omega` = weight * (m.nu) is the weight of the feedback term.
struct TracePoint {
  int face = 0;
  int qp = 0;
  Point x;
  double weight = 0.0;
  double m_dot_nu = 0.0;
  double omega = 0.0;
  std::array<int, 2> nodes{};
  std::array<double, 2> shape{};
};

/// Simulation state on all mesh nodes; Gamma0 entries are held at zero.
struct SimState {
  double t = 0.0;
  Vector u, v, du, dv;

  static SimState zero(std::size_t nodes, double t = 0.0);
};

struct Accelerations {
  Vector ddu, ddv;
};

struct AssemblyOptions {
  /// Per-face replacement of the m.nu multiplier in the feedback term.
  std::optional<std::vector<double>> face_multiplier;
};

/// Galerkin system
///   M u'' + mu K u + mu T' W p1(T u') + a1 C v = 0
///   M v'' + K v + T' W p2(T v') + S u - a2 C u = 0
/// where T maps nodal values to Gamma1 quadrature points and W = diag(omega).
/// Immutable after assembly.
class SemiDiscreteSystem {
public:
  SemiDiscreteSystem(Mesh mesh, BoundaryPartition partition, double alpha1, double alpha2,
                     CoefficientSchedule schedule, FeedbackLaw law1, FeedbackLaw law2, SigmaField sigma,
                     const AssemblyOptions& options = {});

  const Mesh& mesh() const noexcept { return *mesh_; }
  const BoundaryPartition& partition() const noexcept { return *partition_; }
  int dimension() const noexcept { return mesh_->dimension(); }
  double alpha1() const noexcept { return alpha1_; }
  double alpha2() const noexcept { return alpha2_; }
  /// Weight of the rotation terms in the energy: alpha1/alpha2, or 1 when either is zero.
  double energy_weight() const noexcept { return weight_; }
  const CoefficientSchedule& schedule() const noexcept { return schedule_; }
  const FeedbackLaw& law1() const noexcept { return law1_; }
  const FeedbackLaw& law2() const noexcept { return law2_; }
  const SigmaField& sigma() const noexcept { return sigma_; }

  // Operators on all nodes.
  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  const SparseMatrix& coupling() const noexcept { return coupling_; }
  const SparseMatrix& sigma_operator() const noexcept { return sigma_op_; }
  /// Entries int_Gamma (sum nu_i) phi_j phi_k over the whole boundary.
  const SparseMatrix& normal_sum_operator() const noexcept { return normal_sum_; }
  const SparseMatrix& trace() const noexcept { return trace_; }

  // Operators restricted to the free (non-Gamma0) nodes.
  const std::vector<int>& free_nodes() const noexcept { return free_; }
  std::size_t free_count() const noexcept { return free_.size(); }
  const SparseMatrix& mass_free() const noexcept { return mass_f_; }
  const SparseMatrix& stiffness_free() const noexcept { return stiffness_f_; }
  const SparseMatrix& coupling_free() const noexcept { return coupling_f_; }
  const SparseMatrix& sigma_free() const noexcept { return sigma_f_; }
  const SparseMatrix& trace_free() const noexcept { return trace_f_; }

  const std::vector<TracePoint>& trace_points() const noexcept { return points_; }
  /// omega at every trace point, in trace-row order.
  const Vector& omega() const noexcept { return omega_; }

  Vector restrict(const Vector& nodal) const;
  Vector expand(const Vector& free_values) const;
  /// Solves mass_free * x = b.
  Vector solve_mass(const Vector& b) const;

  /// Feedback forces T' W p(T w) on the free nodes, for a nodal velocity w.
  Vector feedback_force(const FeedbackLaw& law, const Vector& nodal_velocity) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const BoundaryPartition> partition_;
  double alpha1_, alpha2_, weight_;
  CoefficientSchedule schedule_;
  FeedbackLaw law1_, law2_;
  SigmaField sigma_;

  SparseMatrix mass_, stiffness_, coupling_, sigma_op_, normal_sum_, trace_;
  std::vector<int> free_;
  SparseMatrix mass_f_, stiffness_f_, coupling_f_, sigma_f_, trace_f_;
  std::vector<TracePoint> points_;
  Vector omega_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> mass_solver_;
};

SemiDiscreteSystem assemble(const Mesh& mesh, const BoundaryPartition& partition, double alpha1, double alpha2,
                            const CoefficientSchedule& schedule, const FeedbackLaw& law1, const FeedbackLaw& law2,
                            const SigmaField& sigma, const AssemblyOptions& options = {});

/// Residuals of the initial compatibility relations at Gamma1 quadrature points:
///   d(u0)/dnu + (m.nu) p1(u1) and d(v0)/dnu + (m.nu) p2(v1) + sigma u0.
struct CompatibilityReport {
  std::vector<double> residual_u;
  std::vector<double> residual_v;
  double max_abs = 0.0;
  bool flagged = false;  // max_abs above 1e-8
};

struct InitialData {
  SimState state;
  CompatibilityReport compatibility;
};

InitialData project_initial_data(const SemiDiscreteSystem& system, const AnalyticField& u0, const AnalyticField& v0,
                                 const AnalyticField& u1, const AnalyticField& v1);

/// Nodal interpolation, with Gamma0 nodes set to zero.
Vector interpolate(const SemiDiscreteSystem& system, const AnalyticField& field);

Accelerations rhs(const SemiDiscreteSystem& system, const SimState& state);
Accelerations rhs(const SemiDiscreteSystem& system, const SimState& state, double t);

/// Coordinate text: "row col value" per nonzero, 17 significant digits.
void write_matrix_coo(std::ostream& out, const SparseMatrix& matrix);

}  // namespace timostab
