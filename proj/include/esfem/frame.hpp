// Pointwise geometry of a curved degree-k element: chart Jacobian, metric,
// normal, tangential projector and tangential gradients of FE fields.
#pragma once

#include "esfem/reference_element.hpp"
#include "esfem/types.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>

namespace esfem {

inline constexpr double kDegenerateMetricTolerance = 1e-24;

template <typename Scalar = double>
struct ElementPointFrame {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

  Eigen::Matrix<Scalar, 3, 2> jacobian;
  Matrix2 metric;
  Matrix2 inverse_metric;
  Scalar area_element = 0;
  Vector3 position;
  Vector3 normal;
  Matrix3 projector;
  /// Tangential gradients of the basis functions, one column per node.
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> basis_gradients;
  /// E(a, b) = (∇_Γ)_a of component b; present when a field was supplied.
  std::optional<Matrix3> field_gradient;
};

/// Fills `f` from pre-tabulated reference gradients (rows = nodes). `nodes`
/// holds the element node positions as columns, in reference-lattice order.
/// Storage in `f` is reused across calls.
template <typename Scalar, typename NodesT, typename GradsT>
void update_frame(ElementPointFrame<Scalar>& f, const Eigen::MatrixBase<NodesT>& nodes,
                  const Eigen::MatrixBase<GradsT>& ref_grads) {
  f.jacobian.noalias() = nodes * ref_grads;
  f.metric.noalias() = f.jacobian.transpose() * f.jacobian;
  const Scalar det = f.metric(0, 0) * f.metric(1, 1) - f.metric(0, 1) * f.metric(1, 0);
  const Scalar tr = f.metric(0, 0) + f.metric(1, 1);
  if (!(det > Scalar(kDegenerateMetricTolerance) * tr * tr))
    throw GeometryError("degenerate element: rank-deficient chart jacobian");
  f.inverse_metric << f.metric(1, 1) / det, -f.metric(0, 1) / det, -f.metric(1, 0) / det,
      f.metric(0, 0) / det;
  f.area_element = std::sqrt(det);
  const Eigen::Matrix<Scalar, 3, 1> c = f.jacobian.col(0).cross(f.jacobian.col(1));
  f.normal = c / c.norm();
  f.projector = Eigen::Matrix<Scalar, 3, 3>::Identity() - f.normal * f.normal.transpose();
  const Eigen::Matrix<Scalar, 3, 2> jg = f.jacobian * f.inverse_metric;
  f.basis_gradients.resize(3, ref_grads.rows());
  f.basis_gradients.noalias() = jg * ref_grads.transpose();
}

/// Frame at barycentric `point`. `nodes` is 3 × n (n = (k+1)(k+2)/2);
/// `field` (also 3 × n) yields the tangential gradient matrix E.
template <typename Scalar = double>
ElementPointFrame<Scalar> frame_at(
    const ReferenceElement<Scalar>& ref,
    const Eigen::Ref<const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>>& nodes,
    const Eigen::Matrix<Scalar, 3, 1>& point,
    const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>* field = nullptr) {
  if (nodes.cols() != ref.size())
    throw PreconditionError("frame_at: node count does not match reference element");
  ElementPointFrame<Scalar> f;
  update_frame(f, nodes, ref.gradients(point));
  f.position.noalias() = nodes * ref.values(point);
  if (field) {
    if (field->cols() != ref.size())
      throw PreconditionError("frame_at: field size does not match reference element");
    f.field_gradient = f.basis_gradients * field->transpose();
  }
  return f;
}

}  // namespace esfem
