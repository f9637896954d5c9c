#include "esfem/exactflow.hpp"
#include "esfem/mesh.hpp"
#include "esfem/study.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace esfem;

TEST_CASE("shrinking sphere") {
  const Sphere unit{1.0};
  CHECK(unit.singular_time() == 0.25);
  CHECK(unit.radius(0) == 1.0);
  CHECK(unit.radius(3.0 / 16) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(unit.mean_curvature(3.0 / 16) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sphere_radius(Sphere{2.0}, 0.75) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(unit.radius(0.25), SingularTimeError);
  CHECK_THROWS_AS(unit.radius(0.3), SingularTimeError);
  CHECK_THROWS_AS(unit.radius(-0.1), PreconditionError);
  // the sphere solves dR/dt = −H = −2/R
  const double t = 0.1, dt = 1e-6;
  CHECK((unit.radius(t + dt) - unit.radius(t - dt)) / (2 * dt) ==
        doctest::Approx(-unit.mean_curvature(t)).epsilon(1e-8));
}

TEST_CASE("exact nodal flow and velocity") {
  auto [mesh, x0] = build_icosphere(1, 2, 1.0);
  const Sphere sol{1.0};
  CHECK(exact_nodal(x0, sol, 0) == x0);
  const NodalVector x = exact_nodal(x0, sol, 0.1);
  CHECK((x.rowwise().norm().array() - sol.radius(0.1)).abs().maxCoeff() < 1e-15);
  const double dt = 1e-6;
  const NodalVector fd = (exact_nodal(x0, sol, 0.1 + dt) - exact_nodal(x0, sol, 0.1 - dt)) / (2 * dt);
  CHECK((fd - exact_velocity(x0, sol, 0.1)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((exact_velocity(x0, sol, 0.1) + (2 / (sol.radius(0.1) * sol.radius(0.1))) * x).norm() < 1e-13);
  CHECK_THROWS_AS(exact_nodal(1.1 * x0, sol, 0.1), PreconditionError);
  CHECK_THROWS_AS(exact_nodal(x0, sol, 0.3), SingularTimeError);
}

TEST_CASE("lift") {
  const Sphere sol{1.0};
  const Vec3 p(0.3, -0.4, 0.8);
  const Vec3 l = lift_to_sphere(p, sol, 0.1);
  CHECK(l.norm() == doctest::Approx(sol.radius(0.1)).epsilon(1e-15));
  CHECK((l.normalized() - p.normalized()).norm() < 1e-15);
  CHECK((lift_to_sphere(l, sol, 0.1) - l).norm() < 1e-15);
  CHECK_THROWS_AS(lift_to_sphere(Vec3::Zero(), sol, 0.1), PreconditionError);
}

TEST_CASE("flow map error") {
  auto [mesh, x0] = build_icosphere(2, 2, 1.0);
  const SurfaceAssembler as(mesh);
  const Sphere sol{1.0};
  const auto at_start = flowmap_error(as, x0, x0, sol, 0);
  CHECK(at_start.l2_error == 0.0);
  CHECK(at_start.max_nodal_error == 0.0);
  const auto exact = flowmap_error(as, x0, exact_nodal(x0, sol, 0.05), sol, 0.05);
  CHECK(exact.l2_error < 1e-14);
  const double r = sol.radius(0.05);
  const auto off = flowmap_error(as, x0, (r + 1e-3) * x0, sol, 0.05);
  CHECK(off.max_nodal_error == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(off.l2_error == doctest::Approx(1e-3 * std::sqrt(as.area(x0))).epsilon(1e-3));
}

// Observed orders of sup|1 − δ_h|, sup|n_h − n| and the L² interpolation
// error. Even k gains one order on the sphere in the first two: the leading
// interpolation error of the surface is tangential there.
TEST_CASE("geometric approximation orders") {
  const Sphere sol{1.0};
  const int expected[][3] = {{2, 1, 2}, {4, 3, 3}, {4, 3, 4}};
  for (int k = 1; k <= 3; ++k) {
    std::vector<std::pair<double, double>> delta, normal, interp;
    for (int level = 1; level <= 3; ++level) {
      auto [mesh, x] = build_icosphere(level, k, 1.0);
      const auto rep = geometric_errors(SurfaceAssembler(mesh), x, sol, 0, interpolation_probe);
      delta.emplace_back(rep.h, rep.sup_one_minus_delta);
      normal.emplace_back(rep.h, rep.sup_normal_error);
      interp.emplace_back(rep.h, rep.interp_L2_error);
    }
    CAPTURE(k);
    const int* e = expected[k - 1];
    CHECK(std::abs(eoc(delta).orders.back() - e[0]) < 0.3);
    CHECK(std::abs(eoc(normal).orders.back() - e[1]) < 0.3);
    CHECK(std::abs(eoc(interp).orders.back() - e[2]) < 0.3);
  }
}

TEST_CASE("lifted area ratio of the exact sphere") {
  const auto ref = make_reference(1);
  Eigen::Matrix<double, 3, Eigen::Dynamic> nodes(3, 3);
  nodes << 1, 0, 0,
           0, 1, 0,
           0, 0, 1;
  const auto f = frame_at<double>(ref, nodes, Barycentric(1.0 / 3, 1.0 / 3, 1.0 / 3));
  // the centroid of the octant face sits at distance 1/√3; the radial lift
  // scales tangential lengths by R/|p| and the face is orthogonal to p
  CHECK(lifted_area_ratio(f, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
}
