#include "esfem/frame.hpp"
#include "esfem/quadrature.hpp"
#include "esfem/reference_element.hpp"

#include <doctest.h>

#include <cmath>

using namespace esfem;

namespace {

double integrate_monomial(const QuadratureRule<double>& rule, int a, int b) {
  double s = 0;
  for (std::size_t q = 0; q < rule.size(); ++q)
    s += rule.weights[q] * std::pow(rule.points[q][1], a) * std::pow(rule.points[q][2], b);
  return s;
}

// ∫ ξ^a η^b over the reference triangle = a! b! / (a + b + 2)!
double exact_monomial(int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); }

}  // namespace

TEST_CASE("gauss-legendre on [0,1] integrates polynomials of degree 2n-1") {
  for (int n = 1; n <= 12; ++n) {
    const auto line = gauss_legendre(n);
    double sum = 0;
    for (double w : line.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += line.weights[i] * std::pow(line.points[i], p);
      CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), PreconditionError);
}

TEST_CASE("triangle moments") {
  const auto rule = make_quadrature(4);
  CHECK(integrate_monomial(rule, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(integrate_monomial(rule, 1, 1) == doctest::Approx(1.0 / 24).epsilon(1e-15));
  CHECK(integrate_monomial(rule, 2, 2) == doctest::Approx(1.0 / 180).epsilon(1e-15));
}

TEST_CASE("triangle rule exactness") {
  for (int d : {0, 1, 2, 5, 8, 13}) {
    const auto rule = make_quadrature(d);
    CHECK(rule.exactness_degree == d);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b)
        CHECK(integrate_monomial(rule, a, b) == doctest::Approx(exact_monomial(a, b)).epsilon(1e-13));
    for (const auto& p : rule.points) {
      CHECK(p.minCoeff() > 0);
      CHECK(p.sum() == doctest::Approx(1.0));
    }
  }
  CHECK_THROWS_AS(make_quadrature(-1), PreconditionError);
  CHECK_THROWS_AS(make_quadrature(kMaxQuadratureExactness + 1), CapacityError);
}

TEST_CASE("cyclic rule invariance") {
  // f(λ) ≠ f(shifted λ); the cyclic rule gives one value, the plain rule two.
  auto f = [](const Eigen::Vector3d& l) { return 1 / (1 + l(0) + 2 * l(1) * l(1)); };
  auto apply = [&](const QuadratureRule<double>& rule, int shift) {
    double s = 0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& p = rule.points[q];
      s += rule.weights[q] * f(Eigen::Vector3d(p((shift + 0) % 3), p((shift + 1) % 3), p((shift + 2) % 3)));
    }
    return s;
  };
  const auto cyclic = make_quadrature(6);
  const auto plain = make_quadrature(6, false);
  CHECK(cyclic.size() == 3 * plain.size());
  CHECK(std::abs(apply(cyclic, 1) - apply(cyclic, 0)) <= 1e-15);
  CHECK(std::abs(apply(cyclic, 2) - apply(cyclic, 0)) <= 1e-15);
  CHECK(std::abs(apply(plain, 1) - apply(plain, 0)) > 1e-10);
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b)
      CHECK(integrate_monomial(plain, a, b) == doctest::Approx(exact_monomial(a, b)).epsilon(1e-13));
}

TEST_CASE("lattice ordering") {
  const auto idx = lattice_indices(3);
  REQUIRE(idx.size() == 10);
  CHECK(idx[0] == std::array<int, 3>{3, 0, 0});
  CHECK(idx[1] == std::array<int, 3>{0, 3, 0});
  CHECK(idx[2] == std::array<int, 3>{0, 0, 3});
  CHECK(idx[3] == std::array<int, 3>{2, 1, 0});
  CHECK(idx[5] == std::array<int, 3>{0, 2, 1});
  CHECK(idx[7] == std::array<int, 3>{1, 0, 2});
  CHECK(idx[9] == std::array<int, 3>{1, 1, 1});
  for (int k = 1; k <= kMaxDegree; ++k) CHECK(lattice_indices(k).size() == std::size_t(nodes_per_element(k)));
}

TEST_CASE("lagrange basis") {
  for (int k = 1; k <= 6; ++k) {
    const auto ref = make_reference(k);
    SUBCASE("kronecker property") {
      for (int j = 0; j < ref.size(); ++j) {
        const auto v = ref.values(ref.node_barycentrics()[j]);
        for (int i = 0; i < ref.size(); ++i) CHECK(v[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      }
    }
    SUBCASE("partition of unity and reproduction of linears") {
      const Barycentric lambda(0.2, 0.3, 0.5);
      const auto v = ref.values(lambda);
      const auto g = ref.gradients(lambda);
      CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(g.colwise().sum().norm() < 1e-11);
      double xi = 0, dxi = 0;
      for (int i = 0; i < ref.size(); ++i) {
        xi += v[i] * ref.node_barycentrics()[i][1];
        dxi += g(i, 0) * ref.node_barycentrics()[i][1];
      }
      CHECK(xi == doctest::Approx(0.3).epsilon(1e-13));
      CHECK(dxi == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("gradients match finite differences") {
      const Barycentric lambda(0.25, 0.35, 0.4);
      const double eps = 1e-6;
      const auto g = ref.gradients(lambda);
      const Eigen::VectorXd dxi = (ref.values(lambda + Barycentric(-eps, eps, 0)) - ref.values(lambda - Barycentric(-eps, eps, 0))) / (2 * eps);
      const Eigen::VectorXd deta = (ref.values(lambda + Barycentric(-eps, 0, eps)) - ref.values(lambda - Barycentric(-eps, 0, eps))) / (2 * eps);
      CHECK((g.col(0) - dxi).norm() < 1e-6);
      CHECK((g.col(1) - deta).norm() < 1e-6);
    }
  }
  CHECK_THROWS_AS(make_reference(0), PreconditionError);
}

TEST_CASE("frame of a flat triangle") {
  const auto ref = make_reference(1);
  Eigen::Matrix3d nodes;
  nodes << 0, 2, 0,
           0, 0, 1,
           1, 1, 1;
  const auto f = frame_at<double>(ref, Eigen::Matrix<double, 3, Eigen::Dynamic>(nodes), Barycentric(1.0 / 3, 1.0 / 3, 1.0 / 3));
  CHECK(f.area_element == doctest::Approx(2.0));
  CHECK((f.normal - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((f.projector - Vec3(1, 1, 0).asDiagonal().toDenseMatrix()).norm() < 1e-15);
  CHECK((f.position - Vec3(2.0 / 3, 1.0 / 3, 1)).norm() < 1e-15);
  // ∇_Γ of the coordinate field is the projector
  Eigen::Matrix<double, 3, Eigen::Dynamic> field = nodes;
  const auto g = frame_at<double>(ref, Eigen::Matrix<double, 3, Eigen::Dynamic>(nodes), Barycentric(0.2, 0.3, 0.5), &field);
  REQUIRE(g.field_gradient);
  CHECK((*g.field_gradient - g.projector).norm() < 1e-14);

  Eigen::Matrix3d collinear;
  collinear << 0, 1, 2,
               0, 1, 2,
               0, 0, 0;
  CHECK_THROWS_AS(frame_at<double>(ref, Eigen::Matrix<double, 3, Eigen::Dynamic>(collinear), Barycentric(1.0 / 3, 1.0 / 3, 1.0 / 3)),
                  GeometryError);
}
