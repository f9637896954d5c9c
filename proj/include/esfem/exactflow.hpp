// Exact mean curvature flow of a sphere centred at the origin, its
// interpolated nodal vectors, the radial lift, and geometric error measures.
#pragma once

#include "esfem/assembly.hpp"
#include "esfem/types.hpp"

#include <cmath>
#include <functional>

namespace esfem {

/// Sphere shrinking under v = −Hn with H = 2/R (sum of principal
/// curvatures): R(t)² = R₀² − 4t, singular at T = R₀²/4.
template <typename Scalar = double>
struct SphereSolution {
  Scalar initial_radius = 1;

  Scalar singular_time() const { return initial_radius * initial_radius / 4; }

  void check_time(Scalar t) const {
    if (!(t >= 0)) throw PreconditionError("sphere solution: time must be >= 0");
    if (!(t < singular_time()))
      throw SingularTimeError("sphere solution: t = " + std::to_string(double(t)) +
                              " is not before the singular time " + std::to_string(double(singular_time())));
  }

  Scalar radius(Scalar t) const {
    check_time(t);
    return std::sqrt(initial_radius * initial_radius - 4 * t);
  }

  Scalar mean_curvature(Scalar t) const { return 2 / radius(t); }
};

using Sphere = SphereSolution<double>;

double sphere_radius(const Sphere& solution, double t);

/// x*(t) = (R(t)/R₀)·x⁰; x⁰ must lie on the sphere of radius R₀.
NodalVector exact_nodal(const NodalVector& x0, const Sphere& solution, double t);

/// ẋ*(t) = −(2/R(t)²)·x*(t).
NodalVector exact_velocity(const NodalVector& x0, const Sphere& solution, double t);

/// R(t)·p/|p|.
Vec3 lift_to_sphere(const Vec3& point, const Sphere& solution, double t);

/// δ_h at a point of a discrete surface: the area element of the radially
/// lifted chart divided by the discrete one, computed from the lifted
/// jacobian d(Rp/|p|) = (R/|p|)(I − p̂p̂ᵀ)J.
double lifted_area_ratio(const ElementPointFrame<double>& frame, double radius);

struct GeometricErrorReport {
  double sup_one_minus_delta = 0;
  double sup_normal_error = 0;
  double interp_L2_error = 0;
  double h = 0;
};

using ScalarField = std::function<double(const Vec3&)>;

/// Measures how well Γ_h[x*] approximates the exact sphere at time t:
/// sup |1 − δ_h| and sup |n̂_h − n∘lift| over quadrature points, and the L²
/// error on the sphere of the lifted Lagrange interpolant of `probe`.
GeometricErrorReport geometric_errors(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                      const Sphere& solution, double t, const ScalarField& probe);

struct FlowmapError {
  double l2_error = 0;
  double max_nodal_error = 0;
};

/// L² error over Γ_h[x⁰] of X_h(·,t) − X(·,t), where X_h interpolates the
/// nodes x(t) and X(p,t) = (R(t)/R₀)p is the exact radial flow map, together
/// with max_j |x_j(t) − x*_j(t)|. Γ_h[x⁰] stands in for Γ⁰; using p rather
/// than its lift changes the error by O(h^{k+1}).
FlowmapError flowmap_error(const SurfaceAssembler& assembler, const NodalVector& x0, const NodalVector& x_t,
                           const Sphere& solution, double t);

/// Tolerance used when checking that nodal input lies on the sphere.
inline constexpr double kOnSphereTolerance = 1e-12;

}  // namespace esfem
