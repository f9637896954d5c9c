#include "esfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>

namespace esfem {

using Index = Eigen::Index;

Tabulation tabulate(const ReferenceElement<double>& ref, const QuadratureRule<double>& rule) {
  Tabulation t;
  t.points = rule.points;
  t.weights = rule.weights;
  t.values.resize(rule.size(), ref.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    t.values.row(q) = ref.values(rule.points[q]).transpose();
    t.gradients.push_back(ref.gradients(rule.points[q]));
  }
  return t;
}

Tabulation tabulate_nodes(const ReferenceElement<double>& ref) {
  Tabulation t;
  t.points = ref.node_barycentrics();
  t.values.resize(t.points.size(), ref.size());
  for (std::size_t q = 0; q < t.points.size(); ++q) {
    t.values.row(q) = ref.values(t.points[q]).transpose();
    t.gradients.push_back(ref.gradients(t.points[q]));
  }
  return t;
}

Tabulation tabulate_lattice(const ReferenceElement<double>& ref, int order) {
  if (order < 1) throw PreconditionError("tabulate_lattice: order must be >= 1");
  Tabulation t;
  for (const auto& a : lattice_indices(order))
    t.points.emplace_back(double(a[0]) / order, double(a[1]) / order, double(a[2]) / order);
  t.values.resize(t.points.size(), ref.size());
  for (std::size_t q = 0; q < t.points.size(); ++q) {
    t.values.row(q) = ref.values(t.points[q]).transpose();
    t.gradients.push_back(ref.gradients(t.points[q]));
  }
  return t;
}

SurfaceAssembler::SurfaceAssembler(SurfaceMesh mesh, int quadrature_exactness)
    : mesh_(std::move(mesh)),
      ref_(mesh_.degree),
      rule_(make_quadrature<double>(quadrature_exactness < 0 ? default_quadrature_exactness(mesh_.degree)
                                                             : quadrature_exactness)),
      quad_(tabulate(ref_, rule_)),
      nodes_(tabulate_nodes(ref_)) {
  const int n = mesh_.nodes_per_element();
  if (n != ref_.size()) throw PreconditionError("mesh element width does not match its degree");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh_.element_count() * n * n);
  for (Index e = 0; e < mesh_.element_count(); ++e)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) trips.emplace_back(mesh_.elements(e, i), mesh_.elements(e, j), 0.0);
  pattern_.resize(mesh_.node_count, mesh_.node_count);
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  slots_.resize(mesh_.element_count() * n * n);
  const auto* outer = pattern_.outerIndexPtr();
  const auto* inner = pattern_.innerIndexPtr();
  for (Index e = 0; e < mesh_.element_count(); ++e)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Index row = mesh_.elements(e, i), col = mesh_.elements(e, j);
        const auto* begin = inner + outer[col];
        const auto* end = inner + outer[col + 1];
        slots_[(e * n + i) * n + j] = std::lower_bound(begin, end, row) - inner;
      }
}

void SurfaceAssembler::check_positions(const NodalVector& x) const {
  if (x.rows() != mesh_.node_count)
    throw PreconditionError("nodal vector has " + std::to_string(x.rows()) + " entries, mesh has " +
                            std::to_string(mesh_.node_count) + " nodes");
}

void SurfaceAssembler::mass_and_stiffness(const NodalVector& x, SparseSymMatrix& mass,
                                          SparseSymMatrix& stiffness) const {
  const int n = mesh_.nodes_per_element();
  mass = pattern_;
  stiffness = pattern_;
  double* mv = mass.valuePtr();
  double* av = stiffness.valuePtr();
  Eigen::MatrixXd m_loc(n, n), a_loc(n, n);
  Index current = -1;
  auto flush = [&](Index e) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Index s = slots_[(e * n + i) * n + j];
        mv[s] += m_loc(std::min(i, j), std::max(i, j));
        av[s] += a_loc(std::min(i, j), std::max(i, j));
      }
  };
  for_each_point(x, quad_, [&](Index e, std::size_t q, double w, const ElementPointFrame<double>& f) {
    if (e != current) {
      if (current >= 0) flush(current);
      current = e;
      m_loc.setZero();
      a_loc.setZero();
    }
    const double wa = w * f.area_element;
    const auto phi = quad_.values.row(q);
    const auto& g = f.basis_gradients;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) {
        m_loc(i, j) += wa * phi[i] * phi[j];
        a_loc(i, j) += wa * g.col(i).dot(g.col(j));
      }
  });
  if (current >= 0) flush(current);
}

SparseSymMatrix SurfaceAssembler::mass(const NodalVector& x) const {
  SparseSymMatrix m, a;
  mass_and_stiffness(x, m, a);
  return m;
}

SparseSymMatrix SurfaceAssembler::stiffness(const NodalVector& x) const {
  SparseSymMatrix m, a;
  mass_and_stiffness(x, m, a);
  return a;
}

NodalVector SurfaceAssembler::apply_Ax(const NodalVector& x) const {
  const int n = mesh_.nodes_per_element();
  NodalVector out = NodalVector::Zero(mesh_.node_count, 3);
  Eigen::Matrix<double, 3, Eigen::Dynamic> local(3, n);
  Eigen::Matrix<double, 3, Eigen::Dynamic> nodes(3, n);
  Index current = -1;
  auto flush = [&](Index e) {
    for (int i = 0; i < n; ++i) out.row(mesh_.elements(e, i)) += local.col(i).transpose();
  };
  for_each_point(x, quad_, [&](Index e, std::size_t, double w, const ElementPointFrame<double>& f) {
    if (e != current) {
      if (current >= 0) flush(current);
      current = e;
      local.setZero();
      for (int i = 0; i < n; ++i) nodes.col(i) = x.row(mesh_.elements(e, i)).transpose();
    }
    // Row i of A(x)x is Σ_j (∇φ_i·∇φ_j) x_j = Eᵀ∇φ_i with E = Σ_j ∇φ_j x_jᵀ.
    const Mat3 E = f.basis_gradients * nodes.transpose();
    local.noalias() += (w * f.area_element) * (E.transpose() * f.basis_gradients);
  });
  if (current >= 0) flush(current);
  return out;
}

double SurfaceAssembler::area(const NodalVector& x) const {
  double a = 0;
  for_each_point(x, quad_, [&](Index, std::size_t, double w, const ElementPointFrame<double>& f) {
    a += w * f.area_element;
  });
  return a;
}

NodalVector intermediate_nodal(const NodalVector& x_star, const NodalVector& x, double theta) {
  if (x_star.rows() != x.rows()) throw PreconditionError("intermediate_nodal: size mismatch");
  return (1.0 - theta) * x_star + theta * x;
}

double quadratic_form(const SparseSymMatrix& m, const NodalVector& w, const NodalVector& z) {
  if (w.rows() != m.rows() || z.rows() != m.rows()) throw PreconditionError("quadratic_form: size mismatch");
  const NodalVector mz = m * z;
  return w.cwiseProduct(mz).sum();
}

double symmetry_residual(const SparseSymMatrix& m) {
  const SparseSymMatrix t = m.transpose();
  const SparseSymMatrix d = m - t;
  return d.nonZeros() == 0 ? 0.0 : d.coeffs().cwiseAbs().maxCoeff();
}

namespace {
double clipped_sqrt(double v, const char* what) {
  if (v < 0) {
    std::cerr << "warning: " << what << " squared norm " << v << " clipped to 0\n";
    return 0.0;
  }
  return std::sqrt(v);
}
}  // namespace

double norm_M(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w) {
  return clipped_sqrt(quadratic_form(assembler.mass(x), w, w), "M");
}

double seminorm_A(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w) {
  return clipped_sqrt(quadratic_form(assembler.stiffness(x), w, w), "A");
}

double gradient_linf(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w) {
  if (w.rows() != x.rows()) throw PreconditionError("gradient_linf: size mismatch");
  const SurfaceMesh& mesh = assembler.mesh();
  const int n = mesh.nodes_per_element();
  Eigen::Matrix<double, 3, Eigen::Dynamic> coeffs(3, n);
  double best = 0;
  auto visit = [&](Index e, std::size_t, double, const ElementPointFrame<double>& f) {
    for (int i = 0; i < n; ++i) coeffs.col(i) = w.row(mesh.elements(e, i)).transpose();
    best = std::max(best, (f.basis_gradients * coeffs.transpose()).norm());
  };
  assembler.for_each_point(x, assembler.quadrature_table(), visit);
  assembler.for_each_point(x, assembler.node_table(), visit);
  return best;
}

void write_coordinate(std::ostream& os, const SparseSymMatrix& m) {
  os << std::setprecision(17);
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseSymMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace esfem
