#include "esfem/mesh.hpp"
#include "esfem/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace esfem;

namespace {

struct Fixture {
  MeshWithPositions m;
  SurfaceAssembler as;
  double h;
  Fixture(int level, int degree)
      : m(build_icosphere(level, degree, 1.0)), as(m.mesh), h(mesh_size(m.mesh, m.positions).h_max) {}
  const NodalVector& x() const { return m.positions; }
  Eigen::Index n() const { return m.mesh.node_count; }
};

}  // namespace

TEST_CASE("identities vanish for x = x*") {
  const Fixture f(1, 2);
  const NodalVector w = random_field(f.n(), 1, 1.0), z = random_field(f.n(), 2, 1.0);
  for (const auto& r : {mass_difference_identity(f.as, f.x(), f.x(), w, z),
                        stiffness_difference_identity(f.as, f.x(), f.x(), w), monotone_decomposition(f.as, f.x(), f.x())}) {
    CHECK(std::abs(r.lhs) < 1e-13);
    CHECK(std::abs(r.rhs) < 1e-13);
    CHECK(r.rel_residual <= 1.0);
    for (const auto& [name, value] : r.breakdown) CHECK(std::abs(value) < 1e-13);
  }
}

TEST_CASE("matrix difference identities hold for random perturbations") {
  for (int k = 1; k <= 3; ++k) {
    const Fixture f(2, k);
    for (int trial = 0; trial < 3; ++trial) {
      CAPTURE(k);
      CAPTURE(trial);
      const NodalVector x = f.x() + random_field(f.n(), 10 + trial, 0.05 * f.h);
      const NodalVector w = random_field(f.n(), 20 + trial, 1.0), z = random_field(f.n(), 30 + trial, 1.0);
      std::vector<IdentityReport> mass, stiff, mono;
      for (int q : {2, 4, 8, 16}) {
        mass.push_back(mass_difference_identity(f.as, f.x(), x, w, z, q));
        stiff.push_back(stiffness_difference_identity(f.as, f.x(), x, w, q));
        mono.push_back(monotone_decomposition(f.as, f.x(), x, q));
      }
      CHECK(mass.back().rel_residual <= 1e-8);
      CHECK(stiff.back().rel_residual <= 1e-8);
      CHECK(residuals_settle(mass));
      CHECK(residuals_settle(stiff));
      CHECK(residuals_settle(mono));
      const auto& r = mono.back();
      CHECK(r.abs_residual <= 1e-8 * std::max(std::abs(r.lhs), r.part("normal_part")));
      CHECK(r.part("normal_part") >= 0);
      CHECK(r.rhs == doctest::Approx(r.part("trace_part") + r.part("normal_part")));
      CHECK(mass.back().theta_quadrature_order == 16);
      CHECK(mass.back().surface_quadrature_exactness == f.as.quadrature_exactness());
      CHECK(stiff.back().part("deformation_part") + stiff.back().part("gradient_part") ==
            doctest::Approx(stiff.back().rhs));
    }
  }
}

TEST_CASE("pure scaling") {
  const Fixture f(2, 1);
  const double s = 0.01, area = f.as.area(f.x());
  const NodalVector x = (1 + s) * f.x();
  const auto stiff = stiffness_difference_identity(f.as, f.x(), x, f.x());
  CHECK(stiff.lhs == doctest::Approx(2 * s * area).epsilon(1e-10));
  const auto mono = monotone_decomposition(f.as, f.x(), x);
  CHECK(mono.part("normal_part") <= 1e-12 * std::abs(mono.lhs));
  CHECK(mono.lhs == doctest::Approx(2 * s * s * area).epsilon(1e-8));
  CHECK(mono.part("trace_part") == doctest::Approx(mono.lhs).epsilon(1e-8));
}

TEST_CASE("trace functional") {
  for (int k = 1; k <= 2; ++k) {
    const Fixture f(2, k);
    CHECK(trace_functional(f.as, f.x(), f.x()) == doctest::Approx(2 * f.as.area(f.x())).epsilon(1e-12));
    const NodalVector c = NodalVector::Ones(f.n(), 3) * 0.7;
    CHECK(std::abs(trace_functional(f.as, f.x(), c)) < 1e-12);
  }
}

TEST_CASE("norm equivalence") {
  const Fixture f(2, 1);
  const std::vector<double> thetas{0, 0.25, 0.5, 0.75, 1};
  SUBCASE("zero perturbation") {
    const auto r = norm_equivalence_probe(f.as, f.x(), NodalVector::Zero(f.n(), 3), 5, thetas, 1);
    for (const auto& range : {r.linf_value, r.linf_gradient, r.l2_value, r.l2_gradient}) {
      CHECK(range.min == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(range.max == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  SUBCASE("scaling gives the measure ratio") {
    const double s = 0.2;
    const auto r = norm_equivalence_probe(f.as, f.x(), s * f.x(), 5, {1.0}, 1);
    CHECK(r.l2_value.min == doctest::Approx(1 + s).epsilon(1e-12));
    CHECK(r.l2_value.max == doctest::Approx(1 + s).epsilon(1e-12));
    CHECK(r.linf_value.max == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("admissible random perturbation") {
    NodalVector e = random_field(f.n(), 5, 1.0);
    e *= 0.5 / gradient_linf(f.as, f.x(), e);
    const auto r = norm_equivalence_probe(f.as, f.x(), e, 20, thetas, 2);
    CHECK(r.hypothesis_value == doctest::Approx(0.5));
    CHECK(r.linf_value.max <= 2.05);
    CHECK(r.trials == 20);
  }
  SUBCASE("hypothesis violation") {
    CHECK_THROWS_AS(norm_equivalence_probe(f.as, f.x(), f.x(), 5, thetas, 1), PreconditionError);
  }
}

TEST_CASE("defect") {
  const Fixture f(2, 2);
  const auto d = defect(f.as, f.x(), Sphere{1.0}, 0.05);
  CHECK(d.solve_residual <= 1e-10);
  CHECK(d.norm_M_defect == doctest::Approx(norm_M(f.as, exact_nodal(f.x(), Sphere{1.0}, 0.05), d.defect)));
  CHECK(d.h > 0);
  CHECK(d.t == 0.05);
  CHECK_THROWS_AS(defect(f.as, f.x(), Sphere{1.0}, 0.3), SingularTimeError);
}

TEST_CASE("eoc") {
  CHECK(eoc({{1, 1}, {0.5, 0.25}}).orders[0] == doctest::Approx(2.0));
  const auto t = eoc({{1, 1}, {0.5, 0.5}, {0.25, 0.25}});
  CHECK(t.orders.size() == 2);
  CHECK(t.orders[0] == doctest::Approx(1.0));
  CHECK(t.orders[1] == doctest::Approx(1.0));
  std::vector<std::pair<double, double>> rows;
  for (double h : {0.9, 0.37, 0.11, 0.05}) rows.emplace_back(h, h * h * h);
  for (double o : eoc(rows).orders) CHECK(std::abs(o - 3) < 1e-12);
  CHECK_THROWS_AS(eoc({{1, 1}}), PreconditionError);
  CHECK_THROWS_AS(eoc({{1, 1}, {0.5, 0}}), PreconditionError);
  CHECK_THROWS_AS(eoc({{0.5, 1}, {1, 0.5}}), PreconditionError);
}

TEST_CASE("random fields are seeded") {
  const NodalVector a = random_field(50, 7, 0.3), b = random_field(50, 7, 0.3), c = random_field(50, 8, 0.3);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.rowwise().norm().maxCoeff() == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("report serialisation") {
  const Fixture f(1, 1);
  const NodalVector x = f.x() + random_field(f.n(), 1, 0.01);
  const auto r = monotone_decomposition(f.as, f.x(), x, 8);
  const auto j = to_json(r);
  CHECK(j["identity"] == "monotone");
  CHECK(j["theta_quadrature_order"] == 8);
  CHECK(j["breakdown"].contains("normal_part"));
  const std::string row = csv_row(r, f.h, 1);
  CHECK(row.rfind("monotone,", 0) == 0);
  CHECK(row.find("trace_part=") != std::string::npos);
  const std::string header = identity_csv_header();
  CHECK(std::count(header.begin(), header.end(), ',') == 9);
  CHECK_THROWS(r.part("missing"));
}
