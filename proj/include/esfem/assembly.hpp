// Mass and stiffness matrices on Γ_h[x], the action A(x)x, discrete norms
// and the θ-family of intermediate nodal vectors.
#pragma once

#include "esfem/frame.hpp"
#include "esfem/mesh.hpp"
#include "esfem/quadrature.hpp"
#include "esfem/reference_element.hpp"
#include "esfem/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

namespace esfem {

/// Scalar N×N matrix; the block matrix of the method is this matrix ⊗ I₃,
/// so it acts on a NodalVector column by column (`M * x`).
using SparseSymMatrix = Eigen::SparseMatrix<double>;

/// Basis values and reference gradients tabulated at a fixed point set.
struct Tabulation {
  std::vector<Barycentric> points;
  std::vector<double> weights;  // empty for node tabulations
  Eigen::MatrixXd values;       // points × nodes
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>> gradients;

  std::size_t size() const { return points.size(); }
};

Tabulation tabulate(const ReferenceElement<double>& ref, const QuadratureRule<double>& rule);
Tabulation tabulate_nodes(const ReferenceElement<double>& ref);

/// Tabulation at the points of the degree-`order` barycentric lattice,
/// corners and edges included; no weights.
Tabulation tabulate_lattice(const ReferenceElement<double>& ref, int order);

inline int default_quadrature_exactness(int degree) { return 2 * degree + 2; }

class SurfaceAssembler {
 public:
  /// `quadrature_exactness < 0` selects the default 2k + 2.
  explicit SurfaceAssembler(SurfaceMesh mesh, int quadrature_exactness = -1);

  const SurfaceMesh& mesh() const { return mesh_; }
  const ReferenceElement<double>& reference() const { return ref_; }
  const QuadratureRule<double>& quadrature() const { return rule_; }
  const Tabulation& quadrature_table() const { return quad_; }
  const Tabulation& node_table() const { return nodes_; }
  int quadrature_exactness() const { return rule_.exactness_degree; }

  SparseSymMatrix mass(const NodalVector& x) const;
  SparseSymMatrix stiffness(const NodalVector& x) const;
  /// Both matrices in one element pass; they share a sparsity pattern.
  void mass_and_stiffness(const NodalVector& x, SparseSymMatrix& mass, SparseSymMatrix& stiffness) const;
  /// A(x)x evaluated element by element without forming A.
  NodalVector apply_Ax(const NodalVector& x) const;
  /// Quadrature area of Γ_h[x]; equals 1ᵀM(x)1.
  double area(const NodalVector& x) const;

  /// Zero matrix with the element-connectivity pattern.
  SparseSymMatrix pattern() const { return pattern_; }

  /// Calls `fn(element, point, weight, frame)` for every point of `table` on
  /// every element of Γ_h[x]; `weight` is the reference weight (0 for node
  /// tabulations) and `frame.position` is filled. Elements are visited in
  /// index order.
  template <typename Fn>
  void for_each_point(const NodalVector& x, const Tabulation& table, Fn&& fn) const;

 private:
  void check_positions(const NodalVector& x) const;

  SurfaceMesh mesh_;
  ReferenceElement<double> ref_;
  QuadratureRule<double> rule_;
  Tabulation quad_;
  Tabulation nodes_;
  SparseSymMatrix pattern_;
  std::vector<Eigen::Index> slots_;  // element-major, n × n local → value index
};

template <typename Fn>
void SurfaceAssembler::for_each_point(const NodalVector& x, const Tabulation& table, Fn&& fn) const {
  check_positions(x);
  const int n = mesh_.nodes_per_element();
  Eigen::Matrix<double, 3, Eigen::Dynamic> nodes(3, n);
  ElementPointFrame<double> frame;
  for (Eigen::Index e = 0; e < mesh_.element_count(); ++e) {
    for (int i = 0; i < n; ++i) nodes.col(i) = x.row(mesh_.elements(e, i)).transpose();
    for (std::size_t q = 0; q < table.size(); ++q) {
      try {
        update_frame(frame, nodes, table.gradients[q]);
      } catch (const GeometryError&) {
        throw GeometryError("degenerate element " + std::to_string(e) + ": rank-deficient chart jacobian");
      }
      frame.position.noalias() = nodes * table.values.row(q).transpose();
      fn(e, q, table.weights.empty() ? 0.0 : table.weights[q], frame);
    }
  }
}

/// x^θ = (1 − θ)x* + θx.
NodalVector intermediate_nodal(const NodalVector& x_star, const NodalVector& x, double theta);

/// Σ over components of wᵀ M z.
double quadratic_form(const SparseSymMatrix& m, const NodalVector& w, const NodalVector& z);

/// max |M(i,j) − M(j,i)|.
double symmetry_residual(const SparseSymMatrix& m);

/// √(wᵀM(x)w); a negative roundoff value is clipped to 0 with a warning.
double norm_M(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w);
/// √(wᵀA(x)w), clipped like norm_M.
double seminorm_A(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w);

/// Discrete sup over quadrature points and element nodes of the Frobenius
/// norm of ∇_{Γ_h[x]} w_h.
double gradient_linf(const SurfaceAssembler& assembler, const NodalVector& x, const NodalVector& w);

/// Writes "row col value" lines (0-based), one per stored entry.
void write_coordinate(std::ostream& os, const SparseSymMatrix& m);

}  // namespace esfem
