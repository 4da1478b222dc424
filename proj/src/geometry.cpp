#include "timostab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "timostab/errors.hpp"
#include "timostab/fem.hpp"

namespace timostab {

BoundaryFace Mesh::make_face(int dimension, std::span<const Point> nodes, std::array<int, 2> face_nodes,
                             const Point& normal) {
  BoundaryFace face;
  face.nodes = face_nodes;
  face.normal = normal;
  if (dimension == 1) {
    face.nodes[1] = -1;
    face.centroid = nodes[face_nodes[0]];
    face.measure = 1.0;
    face.quadrature.push_back({face.centroid, {1.0, 0.0}, 1.0});
    return face;
  }
  const Point& a = nodes[face_nodes[0]];
  const Point& b = nodes[face_nodes[1]];
  face.centroid = 0.5 * (a + b);
  face.measure = (b - a).norm();
  const auto rule = fem::gauss_legendre(2);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double t = 0.5 * (1.0 + rule.points[q]);
    face.quadrature.push_back({(1.0 - t) * a + t * b, {1.0 - t, t}, 0.5 * rule.weights[q] * face.measure});
  }
  return face;
}

Mesh::Mesh(int dimension, std::vector<Point> nodes, std::vector<std::array<int, 4>> elements,
           std::vector<BoundaryFace> faces)
    : dimension_(dimension), nodes_(std::move(nodes)), elements_(std::move(elements)), faces_(std::move(faces)) {
  validate();
}

void Mesh::validate() {
  if (dimension_ != 1 && dimension_ != 2) throw InvalidArgument("mesh dimension must be 1 or 2");
  if (elements_.empty()) throw InvalidArgument("mesh has no elements");
  const int npe = nodes_per_element();
  const auto n = static_cast<int>(nodes_.size());
  for (const auto& conn : elements_)
    for (int a = 0; a < npe; ++a)
      if (conn[a] < 0 || conn[a] >= n) throw InvalidArgument("element references unknown node");

  volumes_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& conn = elements_[e];
    double orientation = 0.0;
    if (dimension_ == 1) {
      orientation = nodes_[conn[1]].x() - nodes_[conn[0]].x();
    } else {
      // signed area by the shoelace formula
      for (int a = 0; a < 4; ++a) {
        const Point& p = nodes_[conn[a]];
        const Point& q = nodes_[conn[(a + 1) % 4]];
        orientation += 0.5 * (p.x() * q.y() - q.x() * p.y());
      }
    }
    if (!(orientation > 0.0)) throw InvalidArgument("degenerate or inverted element " + std::to_string(e));
    double vol = 0.0;
    for (const auto& s : fem::element_samples(*this, e, 2)) vol += s.weight;
    volumes_[e] = vol;
  }

  for (const auto& face : faces_) {
    if (std::abs(face.normal.norm() - 1.0) > 1e-12) throw InvalidArgument("boundary normal is not unit length");
  }

  // Every element facet owned by exactly one element must appear exactly once as a face.
  std::map<std::pair<int, int>, int> facet_count;
  for (const auto& conn : elements_) {
    if (dimension_ == 1) {
      facet_count[{conn[0], -1}]++;
      facet_count[{conn[1], -1}]++;
    } else {
      for (int a = 0; a < 4; ++a) {
        int p = conn[a];
        int q = conn[(a + 1) % 4];
        facet_count[{std::min(p, q), std::max(p, q)}]++;
      }
    }
  }
  std::map<std::pair<int, int>, int> face_count;
  for (const auto& face : faces_) {
    std::pair<int, int> key = dimension_ == 1 ? std::pair{face.nodes[0], -1}
                                              : std::pair{std::min(face.nodes[0], face.nodes[1]),
                                                          std::max(face.nodes[0], face.nodes[1])};
    face_count[key]++;
  }
  for (const auto& [key, count] : facet_count) {
    const bool boundary = count == 1;
    const auto it = face_count.find(key);
    const int listed = it == face_count.end() ? 0 : it->second;
    if (boundary != (listed == 1) || listed > 1)
      throw InvalidArgument("boundary faces do not tile the mesh boundary exactly once");
  }
  for (const auto& [key, count] : face_count)
    if (!facet_count.contains(key)) throw InvalidArgument("boundary face is not an element facet");
}

double Mesh::volume() const {
  double v = 0.0;
  for (double x : volumes_) v += x;
  return v;
}

double Mesh::boundary_measure() const {
  double m = 0.0;
  for (const auto& f : faces_) m += f.measure;
  return m;
}

Mesh build_interval_mesh(double length, int node_count) {
  if (!(length > 0.0)) throw InvalidArgument("interval length must be positive");
  if (node_count < 3) throw InvalidArgument("interval mesh needs at least 3 nodes");
  std::vector<Point> nodes(static_cast<std::size_t>(node_count));
  const double h = length / (node_count - 1);
  for (int i = 0; i < node_count; ++i) nodes[i] = Point(i == node_count - 1 ? length : i * h, 0.0);
  std::vector<std::array<int, 4>> elements;
  for (int i = 0; i + 1 < node_count; ++i) elements.push_back({i, i + 1, -1, -1});
  std::vector<BoundaryFace> faces;
  faces.push_back(Mesh::make_face(1, nodes, {0, -1}, Point(-1.0, 0.0)));
  faces.push_back(Mesh::make_face(1, nodes, {node_count - 1, -1}, Point(1.0, 0.0)));
  return Mesh(1, std::move(nodes), std::move(elements), std::move(faces));
}

Mesh build_rect_mesh(double lx, double ly, int nx, int ny) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("rectangle side lengths must be positive");
  if (nx < 2 || ny < 2) throw InvalidArgument("rectangle mesh needs at least 2 cells per direction");
  const int stride = nx + 1;
  auto id = [stride](int i, int j) { return i + stride * j; };
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      nodes.emplace_back(i == nx ? lx : lx * i / nx, j == ny ? ly : ly * j / ny);
  std::vector<std::array<int, 4>> elements;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});

  std::vector<BoundaryFace> faces;
  for (int i = 0; i < nx; ++i) faces.push_back(Mesh::make_face(2, nodes, {id(i, 0), id(i + 1, 0)}, Point(0, -1)));
  for (int j = 0; j < ny; ++j)
    faces.push_back(Mesh::make_face(2, nodes, {id(nx, j), id(nx, j + 1)}, Point(1, 0)));
  for (int i = nx; i > 0; --i)
    faces.push_back(Mesh::make_face(2, nodes, {id(i, ny), id(i - 1, ny)}, Point(0, 1)));
  for (int j = ny; j > 0; --j) faces.push_back(Mesh::make_face(2, nodes, {id(0, j), id(0, j - 1)}, Point(-1, 0)));
  return Mesh(2, std::move(nodes), std::move(elements), std::move(faces));
}

std::vector<int> BoundaryPartition::gamma1_faces() const {
  std::vector<int> out;
  for (std::size_t f = 0; f < tags.size(); ++f)
    if (tags[f] == BoundaryTag::Gamma1) out.push_back(static_cast<int>(f));
  return out;
}

std::vector<int> BoundaryPartition::free_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < constrained.size(); ++i)
    if (!constrained[i]) out.push_back(static_cast<int>(i));
  return out;
}

BoundaryPartition classify_boundary(const Mesh& mesh, const Point& x0_in) {
  if (!std::isfinite(x0_in.x()) || !std::isfinite(x0_in.y())) throw InvalidArgument("x0 must be finite");
  BoundaryPartition p;
  p.x0 = x0_in;
  if (mesh.dimension() == 1) p.x0.y() = 0.0;
  p.constrained.assign(mesh.node_count(), false);

  bool any0 = false;
  bool any1 = false;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const auto& face = mesh.faces()[f];
    const double c = (face.centroid - p.x0).dot(face.normal);
    const bool gamma1 = c > 0.0;
    std::vector<double> values;
    for (const auto& qp : face.quadrature) {
      const double v = (qp.x - p.x0).dot(face.normal);
      if ((v > 0.0) != gamma1)
        throw InadmissiblePartition("face " + std::to_string(f) + " straddles the sign change of m.nu");
      values.push_back(v);
    }
    p.tags.push_back(gamma1 ? BoundaryTag::Gamma1 : BoundaryTag::Gamma0);
    p.centroid_m_dot_nu.push_back(c);
    p.m_dot_nu.push_back(std::move(values));
    (gamma1 ? any1 : any0) = true;
    if (!gamma1)
      for (int k = 0; k < mesh.nodes_per_face(); ++k) p.constrained[face.nodes[k]] = true;
  }
  if (!any0) throw InadmissiblePartition("Gamma0 is empty for this reference point");
  if (!any1) throw InadmissiblePartition("Gamma1 is empty for this reference point");
  return p;
}

ShapeConstants geometric_constants(const Mesh& mesh, const BoundaryPartition& partition) {
  ShapeConstants c;
  for (const auto& x : mesh.nodes()) c.R = std::max(c.R, (x - partition.x0).norm());
  c.tau0 = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (!partition.on_gamma1(f)) continue;
    for (double v : partition.m_dot_nu[f]) c.tau0 = std::min(c.tau0, v);
  }
  return c;
}

double normal_sum_bound(const Mesh& mesh, const BoundaryPartition& partition) {
  double bound = 0.0;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (!partition.on_gamma1(f)) continue;
    const Point& nu = mesh.faces()[f].normal;
    bound = std::max(bound, std::abs(mesh.dimension() == 1 ? nu.x() : nu.x() + nu.y()));
  }
  return bound;
}

EmbeddingConstants embedding_constants(const Mesh& mesh, const BoundaryPartition& partition,
                                       const EigenIterationControl& control) {
  const auto free = partition.free_nodes();
  if (free.empty()) throw InvalidArgument("no free nodes");
  const auto K = fem::restrict_matrix(fem::assemble_stiffness(mesh), free);
  const auto Mass = fem::restrict_matrix(fem::assemble_mass(mesh), free);
  const auto B = fem::restrict_matrix(
      fem::assemble_boundary_mass(
          mesh, [&](std::size_t f) { return partition.on_gamma1(f); }, [](std::size_t, std::size_t) { return 1.0; }),
      free);

  Eigen::SimplicialLDLT<fem::SparseMatrix> solver(K);
  if (solver.info() != Eigen::Success) throw NumericalFailure("stiffness factorization failed");

  EmbeddingConstants out;

  // Smallest eigenvalue of K x = lambda Mass x by inverse iteration.
  {
    fem::Vector x = fem::Vector::Ones(static_cast<Eigen::Index>(free.size()));
    double lambda = 0.0;
    bool converged = false;
    for (int it = 1; it <= control.max_iterations; ++it) {
      fem::Vector y = solver.solve(Mass * x);
      x = y / std::sqrt(y.dot(Mass * y));
      const fem::Vector Kx = K * x;
      const fem::Vector Mx = Mass * x;
      lambda = x.dot(Kx);
      const double res = (Kx - lambda * Mx).norm() / (lambda * Mx).norm();
      out.iterations_M = it;
      if (res <= control.relative_residual) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericalFailure("Poincare eigen-iteration did not converge");
    out.M = 1.0 / std::sqrt(lambda);
  }

  // Largest eigenvalue of B x = mu K x by power iteration on K^{-1} B.
  {
    fem::Vector x = solver.solve(B * fem::Vector::Ones(static_cast<Eigen::Index>(free.size())));
    double mu = 0.0;
    bool converged = false;
    for (int it = 1; it <= control.max_iterations; ++it) {
      x /= std::sqrt(x.dot(K * x));
      const fem::Vector Bx = B * x;
      const fem::Vector Kx = K * x;
      mu = x.dot(Bx);
      const double res = (Bx - mu * Kx).norm() / (mu * Kx).norm();
      out.iterations_N = it;
      if (res <= control.relative_residual) {
        converged = true;
        break;
      }
      x = solver.solve(Bx);
    }
    if (!converged) throw NumericalFailure("trace eigen-iteration did not converge");
    out.N = std::sqrt(mu);
  }
  return out;
}

std::string to_string(BoundaryTag tag) { return tag == BoundaryTag::Gamma0 ? "Gamma0" : "Gamma1"; }

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old = out.precision(17);
  const int dim = mesh.dimension();
  out << "# timostab mesh v1\n"
      << "# nodes: x [y]; elements: node ids (ccw in 2D); faces: node ids then outward unit normal\n"
      << "dimension " << dim << '\n';
  out << "nodes " << mesh.node_count() << '\n';
  for (const auto& x : mesh.nodes()) {
    out << x.x();
    if (dim == 2) out << ' ' << x.y();
    out << '\n';
  }
  out << "elements " << mesh.element_count() << '\n';
  for (const auto& e : mesh.elements()) {
    for (int a = 0; a < mesh.nodes_per_element(); ++a) out << (a ? " " : "") << e[a];
    out << '\n';
  }
  out << "faces " << mesh.face_count() << '\n';
  for (const auto& f : mesh.faces()) {
    if (dim == 1)
      out << f.nodes[0] << ' ' << f.normal.x() << '\n';
    else
      out << f.nodes[0] << ' ' << f.nodes[1] << ' ' << f.normal.x() << ' ' << f.normal.y() << '\n';
  }
  out.precision(old);
}

namespace {

std::istringstream next_record(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return std::istringstream(line);
  }
  throw InvalidArgument("mesh file: unexpected end of input");
}

std::size_t read_header(std::istream& in, const std::string& keyword) {
  auto rec = next_record(in);
  std::string word;
  long long count = -1;
  rec >> word >> count;
  if (word != keyword || count < 0) throw InvalidArgument("mesh file: expected '" + keyword + " <count>'");
  return static_cast<std::size_t>(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  const auto dim = static_cast<int>(read_header(in, "dimension"));
  if (dim != 1 && dim != 2) throw InvalidArgument("mesh file: dimension must be 1 or 2");
  std::vector<Point> nodes(read_header(in, "nodes"));
  for (auto& x : nodes) {
    auto rec = next_record(in);
    double px = 0.0;
    double py = 0.0;
    if (!(rec >> px) || (dim == 2 && !(rec >> py))) throw InvalidArgument("mesh file: bad node record");
    x = Point(px, py);
  }
  std::vector<std::array<int, 4>> elements(read_header(in, "elements"), {-1, -1, -1, -1});
  const int npe = dim == 1 ? 2 : 4;
  for (auto& e : elements) {
    auto rec = next_record(in);
    for (int a = 0; a < npe; ++a)
      if (!(rec >> e[a])) throw InvalidArgument("mesh file: bad element record");
  }
  const auto nfaces = read_header(in, "faces");
  std::vector<BoundaryFace> faces;
  for (std::size_t f = 0; f < nfaces; ++f) {
    auto rec = next_record(in);
    std::array<int, 2> fn{-1, -1};
    Point normal(0.0, 0.0);
    bool ok = dim == 1 ? static_cast<bool>(rec >> fn[0] >> normal.x())
                       : static_cast<bool>(rec >> fn[0] >> fn[1] >> normal.x() >> normal.y());
    if (!ok) throw InvalidArgument("mesh file: bad face record");
    for (int k = 0; k < (dim == 1 ? 1 : 2); ++k)
      if (fn[k] < 0 || fn[k] >= static_cast<int>(nodes.size()))
        throw InvalidArgument("mesh file: face references unknown node");
    faces.push_back(Mesh::make_face(dim, nodes, fn, normal));
  }
  return Mesh(dim, std::move(nodes), std::move(elements), std::move(faces));
}

void write_partition_csv(std::ostream& out, const Mesh& mesh, const BoundaryPartition& partition) {
  const auto old = out.precision(17);
  out << "face_id,centroid_x,centroid_y,m_dot_nu,tag\n";
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const auto& c = mesh.faces()[f].centroid;
    out << f << ',' << c.x() << ',' << c.y() << ',' << partition.centroid_m_dot_nu[f] << ','
        << to_string(partition.tags[f]) << '\n';
  }
  out.precision(old);
}

}  // namespace timostab
