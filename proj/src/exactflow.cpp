#include "esfem/exactflow.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <string>

namespace esfem {
namespace {

void check_on_sphere(const NodalVector& x0, double radius) {
  for (Eigen::Index j = 0; j < x0.rows(); ++j) {
    const double r = x0.row(j).norm();
    if (!(std::abs(r - radius) <= kOnSphereTolerance * radius))
      throw PreconditionError("node " + std::to_string(j) + " has radius " + std::to_string(r) +
                              ", expected " + std::to_string(radius));
  }
}

}  // namespace

double sphere_radius(const Sphere& solution, double t) { return solution.radius(t); }

NodalVector exact_nodal(const NodalVector& x0, const Sphere& solution, double t) {
  const double r = solution.radius(t);
  check_on_sphere(x0, solution.initial_radius);
  if (t == 0) return x0;
  return (r / solution.initial_radius) * x0;
}

NodalVector exact_velocity(const NodalVector& x0, const Sphere& solution, double t) {
  const double r = solution.radius(t);
  check_on_sphere(x0, solution.initial_radius);
  return (-2.0 / (r * solution.initial_radius)) * x0;
}

Vec3 lift_to_sphere(const Vec3& point, const Sphere& solution, double t) {
  const double r = solution.radius(t);
  const double n = point.norm();
  if (!(n > 0)) throw PreconditionError("lift_to_sphere: the centre has no lift");
  return (r / n) * point;
}

double lifted_area_ratio(const ElementPointFrame<double>& f, double radius) {
  const double r = f.position.norm();
  const Vec3 u = f.position / r;
  const Mat3 proj = Mat3::Identity() - u * u.transpose();
  const Eigen::Matrix<double, 3, 2> lifted = (radius / r) * proj * f.jacobian;
  return lifted.col(0).cross(lifted.col(1)).norm() / f.area_element;
}

GeometricErrorReport geometric_errors(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                      const Sphere& solution, double t, const ScalarField& probe) {
  const double radius = solution.radius(t);
  check_on_sphere(x_star, radius);
  const SurfaceMesh& mesh = assembler.mesh();
  GeometricErrorReport rep;
  rep.h = mesh_size(mesh, x_star).h_max;

  Eigen::VectorXd nodal_probe(mesh.node_count);
  for (Eigen::Index j = 0; j < mesh.node_count; ++j) nodal_probe[j] = probe(x_star.row(j).transpose());

  // Error integrals use a rule two degrees above the assembly default.
  const SurfaceAssembler fine(mesh, default_quadrature_exactness(mesh.degree) + 2);
  const Tabulation& table = fine.quadrature_table();
  const int n = mesh.nodes_per_element();
  // Suprema over a lattice with corners and edges, where interpolation
  // derivatives do not superconverge, plus the quadrature points.
  auto sup = [&](Eigen::Index, std::size_t, double, const ElementPointFrame<double>& f) {
    rep.sup_one_minus_delta = std::max(rep.sup_one_minus_delta, std::abs(1.0 - lifted_area_ratio(f, radius)));
    rep.sup_normal_error = std::max(rep.sup_normal_error, (f.normal - f.position.normalized()).norm());
  };
  fine.for_each_point(x_star, tabulate_lattice(fine.reference(), 2 * mesh.degree + 2), sup);
  fine.for_each_point(x_star, table, sup);

  double l2 = 0;
  fine.for_each_point(x_star, table, [&](Eigen::Index e, std::size_t q, double w, const ElementPointFrame<double>& f) {
    const double delta = lifted_area_ratio(f, radius);
    const Vec3 exact_normal = f.position.normalized();
    double interp = 0;
    for (int i = 0; i < n; ++i) interp += table.values(q, i) * nodal_probe[mesh.elements(e, i)];
    const double diff = probe(radius * exact_normal) - interp;
    l2 += w * f.area_element * delta * diff * diff;
  });
  rep.interp_L2_error = std::sqrt(l2);
  return rep;
}

FlowmapError flowmap_error(const SurfaceAssembler& assembler, const NodalVector& x0, const NodalVector& x_t,
                           const Sphere& solution, double t) {
  const double scale = solution.radius(t) / solution.initial_radius;
  check_on_sphere(x0, solution.initial_radius);
  if (x_t.rows() != x0.rows()) throw PreconditionError("flowmap_error: nodal vectors differ in size");
  const SurfaceMesh& mesh = assembler.mesh();
  const int n = mesh.nodes_per_element();
  const Tabulation& table = assembler.quadrature_table();
  FlowmapError out;
  double l2 = 0;
  assembler.for_each_point(x0, table, [&](Eigen::Index e, std::size_t q, double w, const ElementPointFrame<double>& f) {
    Vec3 xh = Vec3::Zero();
    for (int i = 0; i < n; ++i) xh += table.values(q, i) * x_t.row(mesh.elements(e, i)).transpose();
    const Vec3 exact = scale * f.position;
    l2 += w * f.area_element * (xh - exact).squaredNorm();
  });
  out.l2_error = std::sqrt(l2);
  const NodalVector x_star = exact_nodal(x0, solution, t);
  out.max_nodal_error = (x_t - x_star).rowwise().norm().maxCoeff();
  return out;
}

}  // namespace esfem
