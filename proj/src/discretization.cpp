#include "timostab/discretization.hpp"

#include <cmath>
#include <ostream>

#include "timostab/errors.hpp"
#include "timostab/fem.hpp"

namespace timostab {

SimState SimState::zero(std::size_t nodes, double t) {
  SimState s;
  s.t = t;
  const auto n = static_cast<Eigen::Index>(nodes);
  s.u = Vector::Zero(n);
  s.v = Vector::Zero(n);
  s.du = Vector::Zero(n);
  s.dv = Vector::Zero(n);
  return s;
}

SemiDiscreteSystem::SemiDiscreteSystem(Mesh mesh, BoundaryPartition partition, double alpha1, double alpha2,
                                       CoefficientSchedule schedule, FeedbackLaw law1, FeedbackLaw law2,
                                       SigmaField sigma, const AssemblyOptions& options)
    : mesh_(std::make_shared<const Mesh>(std::move(mesh))),
      partition_(std::make_shared<const BoundaryPartition>(std::move(partition))),
      alpha1_(alpha1),
      alpha2_(alpha2),
      weight_(alpha1 > 0.0 && alpha2 > 0.0 ? alpha1 / alpha2 : 1.0),
      schedule_(std::move(schedule)),
      law1_(std::move(law1)),
      law2_(std::move(law2)),
      sigma_(std::move(sigma)) {
  const Mesh& m = *mesh_;
  const BoundaryPartition& p = *partition_;
  if (!(alpha1_ >= 0.0) || !(alpha2_ >= 0.0)) throw InvalidArgument("coupling parameters must be >= 0");
  if (!schedule_.mu || !schedule_.dmu) throw InvalidArgument("coefficient schedule is incomplete");
  if (p.tags.size() != m.face_count() || p.constrained.size() != m.node_count())
    throw InvalidArgument("partition does not belong to this mesh");
  if (p.gamma1_faces().empty()) throw InadmissiblePartition("Gamma1 is empty");
  if (p.gamma1_faces().size() == m.face_count()) throw InadmissiblePartition("Gamma0 is empty");
  if (sigma_.values.size() != m.face_count()) throw InvalidArgument("sigma field does not belong to this mesh");
  if (options.face_multiplier && options.face_multiplier->size() != m.face_count())
    throw InvalidArgument("face multiplier needs one value per face");

  mass_ = fem::assemble_mass(m);
  stiffness_ = fem::assemble_stiffness(m);
  coupling_ = fem::assemble_coupling(m);
  auto on1 = [&p](std::size_t f) { return p.on_gamma1(f); };
  sigma_op_ = fem::assemble_boundary_mass(m, on1, [this](std::size_t f, std::size_t q) {
    return sigma_.values.at(f).at(q);
  });
  normal_sum_ = fem::assemble_boundary_mass(
      m, [](std::size_t) { return true; },
      [&m](std::size_t f, std::size_t) {
        const Point& nu = m.faces()[f].normal;
        return m.dimension() == 1 ? nu.x() : nu.x() + nu.y();
      });

  for (int f : p.gamma1_faces()) {
    const auto& face = m.faces()[f];
    for (std::size_t q = 0; q < face.quadrature.size(); ++q) {
      TracePoint tp;
      tp.face = f;
      tp.qp = static_cast<int>(q);
      tp.x = face.quadrature[q].x;
      tp.weight = face.quadrature[q].weight;
      tp.m_dot_nu = p.m_dot_nu[f][q];
      const double mult = options.face_multiplier ? (*options.face_multiplier)[f] : tp.m_dot_nu;
      tp.omega = tp.weight * mult;
      tp.nodes = face.nodes;
      tp.shape = face.quadrature[q].shape;
      if (m.nodes_per_face() == 1) tp.shape[1] = 0.0;
      points_.push_back(tp);
    }
  }
  omega_.resize(static_cast<Eigen::Index>(points_.size()));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    omega_[static_cast<Eigen::Index>(i)] = points_[i].omega;
    for (int a = 0; a < m.nodes_per_face(); ++a)
      trip.emplace_back(static_cast<int>(i), points_[i].nodes[a], points_[i].shape[a]);
  }
  trace_.resize(static_cast<Eigen::Index>(points_.size()), static_cast<Eigen::Index>(m.node_count()));
  trace_.setFromTriplets(trip.begin(), trip.end());

  free_ = p.free_nodes();
  mass_f_ = fem::restrict_matrix(mass_, free_);
  stiffness_f_ = fem::restrict_matrix(stiffness_, free_);
  coupling_f_ = fem::restrict_matrix(coupling_, free_);
  sigma_f_ = fem::restrict_matrix(sigma_op_, free_);
  std::vector<Eigen::Triplet<double>> tf;
  std::vector<int> position(m.node_count(), -1);
  for (std::size_t i = 0; i < free_.size(); ++i) position[free_[i]] = static_cast<int>(i);
  for (int k = 0; k < trace_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(trace_, k); it; ++it)
      if (position[it.col()] >= 0) tf.emplace_back(static_cast<int>(it.row()), position[it.col()], it.value());
  trace_f_.resize(trace_.rows(), static_cast<Eigen::Index>(free_.size()));
  trace_f_.setFromTriplets(tf.begin(), tf.end());

  mass_solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(mass_f_);
  if (mass_solver_->info() != Eigen::Success) throw NumericalFailure("mass matrix factorization failed");
}

Vector SemiDiscreteSystem::restrict(const Vector& nodal) const {
  if (nodal.size() != static_cast<Eigen::Index>(mesh_->node_count()))
    throw InvalidArgument("nodal vector has wrong length");
  Vector r(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) r[static_cast<Eigen::Index>(i)] = nodal[free_[i]];
  return r;
}

Vector SemiDiscreteSystem::expand(const Vector& free_values) const {
  if (free_values.size() != static_cast<Eigen::Index>(free_.size()))
    throw InvalidArgument("free-node vector has wrong length");
  Vector full = Vector::Zero(static_cast<Eigen::Index>(mesh_->node_count()));
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = free_values[static_cast<Eigen::Index>(i)];
  return full;
}

Vector SemiDiscreteSystem::solve_mass(const Vector& b) const {
  Vector x = mass_solver_->solve(b);
  if (mass_solver_->info() != Eigen::Success) throw NumericalFailure("mass solve failed");
  return x;
}

Vector SemiDiscreteSystem::feedback_force(const FeedbackLaw& law, const Vector& nodal_velocity) const {
  const Vector s = trace_ * nodal_velocity;
  Vector w(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) w[i] = omega_[i] * law(s[i]);
  return trace_f_.transpose() * w;
}

SemiDiscreteSystem assemble(const Mesh& mesh, const BoundaryPartition& partition, double alpha1, double alpha2,
                            const CoefficientSchedule& schedule, const FeedbackLaw& law1, const FeedbackLaw& law2,
                            const SigmaField& sigma, const AssemblyOptions& options) {
  return SemiDiscreteSystem(mesh, partition, alpha1, alpha2, schedule, law1, law2, sigma, options);
}

Vector interpolate(const SemiDiscreteSystem& system, const AnalyticField& field) {
  const auto& mesh = system.mesh();
  const auto& constrained = system.partition().constrained;
  Vector out(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    out[static_cast<Eigen::Index>(i)] = constrained[i] ? 0.0 : field.value(mesh.nodes()[i]);
  return out;
}

InitialData project_initial_data(const SemiDiscreteSystem& system, const AnalyticField& u0, const AnalyticField& v0,
                                 const AnalyticField& u1, const AnalyticField& v1) {
  InitialData d;
  d.state.t = 0.0;
  d.state.u = interpolate(system, u0);
  d.state.v = interpolate(system, v0);
  d.state.du = interpolate(system, u1);
  d.state.dv = interpolate(system, v1);

  const auto& mesh = system.mesh();
  for (const auto& tp : system.trace_points()) {
    const Point& nu = mesh.faces()[tp.face].normal;
    const double mult = tp.weight > 0.0 ? tp.omega / tp.weight : tp.m_dot_nu;
    const double sig = system.sigma().values[tp.face][tp.qp];
    const double ru = u0.gradient(tp.x).dot(nu) + mult * system.law1()(u1.value(tp.x));
    const double rv = v0.gradient(tp.x).dot(nu) + mult * system.law2()(v1.value(tp.x)) + sig * u0.value(tp.x);
    d.compatibility.residual_u.push_back(ru);
    d.compatibility.residual_v.push_back(rv);
    d.compatibility.max_abs = std::max({d.compatibility.max_abs, std::abs(ru), std::abs(rv)});
  }
  d.compatibility.flagged = d.compatibility.max_abs > 1e-8;
  return d;
}

Accelerations rhs(const SemiDiscreteSystem& system, const SimState& state) { return rhs(system, state, state.t); }

Accelerations rhs(const SemiDiscreteSystem& system, const SimState& state, double t) {
  const auto nodes = static_cast<Eigen::Index>(system.mesh().node_count());
  if (state.u.size() != nodes || state.v.size() != nodes || state.du.size() != nodes || state.dv.size() != nodes)
    throw InvalidArgument("state does not match the system");
  const double mu = system.schedule().mu(t);
  const Vector u = system.restrict(state.u);
  const Vector v = system.restrict(state.v);
  Vector fu = -mu * (system.stiffness_free() * u) - system.alpha1() * (system.coupling_free() * v) -
              mu * system.feedback_force(system.law1(), state.du);
  Vector fv = -(system.stiffness_free() * v) + system.alpha2() * (system.coupling_free() * u) -
              system.feedback_force(system.law2(), state.dv) - system.sigma_free() * u;
  Accelerations a;
  a.ddu = system.expand(system.solve_mass(fu));
  a.ddv = system.expand(system.solve_mass(fv));
  return a;
}

void write_matrix_coo(std::ostream& out, const SparseMatrix& matrix) {
  const auto old = out.precision(17);
  out << "% rows " << matrix.rows() << " cols " << matrix.cols() << " nnz " << matrix.nonZeros() << '\n';
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  out.precision(old);
}

}  // namespace timostab
