// Gauss–Legendre rules on [0,1] and collapsed (Duffy) rules on the reference
// triangle {(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}.
#pragma once

#include "esfem/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace esfem {

inline constexpr int kMaxQuadratureExactness = 60;

template <typename Scalar>
struct LineRule {
  std::vector<Scalar> points;   // in [0, 1]
  std::vector<Scalar> weights;  // sum to 1
};

/// n-point Gauss–Legendre rule mapped to [0, 1]; exact for degree 2n−1.
template <typename Scalar = double>
LineRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw PreconditionError("gauss_legendre: need at least one point");
  LineRule<Scalar> rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar z = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const Scalar p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const Scalar dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // Recompute derivative at the converged root for the weight.
    Scalar p0 = 1, p1 = z;
    for (int j = 2; j <= n; ++j) {
      const Scalar p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? Scalar(1) : n * (z * p1 - p0) / (z * z - 1);
    const Scalar w = Scalar(2) / ((1 - z * z) * dp * dp);
    // z > 0 here; map ±z from [-1,1] to [0,1], half weights.
    rule.points[i] = (1 - z) / 2;
    rule.points[n - 1 - i] = (1 + z) / 2;
    rule.weights[i] = w / 2;
    rule.weights[n - 1 - i] = w / 2;
  }
  if (n % 2 == 1) rule.points[n / 2] = Scalar(0.5);
  return rule;
}

template <typename Scalar = double>
struct QuadratureRule {
  std::vector<Eigen::Matrix<Scalar, 3, 1>> points;  // barycentric
  std::vector<Scalar> weights;                      // sum to 1/2
  int exactness_degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Collapsed tensor Gauss rule integrating every bivariate polynomial of total
/// degree ≤ exactness exactly over the reference triangle. With `cyclic` the
/// rule is averaged over the three cyclic shifts of the barycentric
/// coordinates, so it is invariant under relabelling an element's vertices
/// in cyclic order.
template <typename Scalar = double>
QuadratureRule<Scalar> make_quadrature(int exactness, bool cyclic = true) {
  if (exactness < 0) throw PreconditionError("make_quadrature: negative exactness");
  if (exactness > kMaxQuadratureExactness)
    throw CapacityError("make_quadrature: exactness " + std::to_string(exactness) +
                        " exceeds cap " + std::to_string(kMaxQuadratureExactness));
  // ξ = u, η = (1 − u) v, dξ dη = (1 − u) du dv; degree exactness + 1 in u.
  const int n = (exactness + 2 + 1) / 2;
  const auto line = gauss_legendre<Scalar>(n);
  QuadratureRule<Scalar> rule;
  rule.exactness_degree = exactness;
  rule.points.reserve((cyclic ? 3 : 1) * n * n);
  rule.weights.reserve((cyclic ? 3 : 1) * n * n);
  for (int a = 0; a < n; ++a) {
    const Scalar u = line.points[a];
    for (int b = 0; b < n; ++b) {
      const Scalar v = line.points[b];
      const Scalar xi = u;
      const Scalar eta = (1 - u) * v;
      const Scalar w = line.weights[a] * line.weights[b] * (1 - u);
      if (cyclic) {
        rule.points.emplace_back(1 - xi - eta, xi, eta);
        rule.points.emplace_back(eta, 1 - xi - eta, xi);
        rule.points.emplace_back(xi, eta, 1 - xi - eta);
        rule.weights.insert(rule.weights.end(), 3, w / 3);
      } else {
        rule.points.emplace_back(1 - xi - eta, xi, eta);
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

}  // namespace esfem
