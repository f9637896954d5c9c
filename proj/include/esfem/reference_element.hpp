// Degree-k Lagrange basis on the equispaced barycentric lattice of the
// reference triangle.
#pragma once

#include "esfem/types.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace esfem {

inline constexpr int kMaxDegree = 8;

/// Lattice multi-indices (a0, a1, a2) with a0 + a1 + a2 = k, ordered as:
/// the three corners, then the interior points of edges 0→1, 1→2, 2→0
/// (walking from the first corner), then the interior lattice points.
inline std::vector<std::array<int, 3>> lattice_indices(int k) {
  std::vector<std::array<int, 3>> idx;
  idx.push_back({k, 0, 0});
  idx.push_back({0, k, 0});
  idx.push_back({0, 0, k});
  for (int t = 1; t < k; ++t) idx.push_back({k - t, t, 0});
  for (int t = 1; t < k; ++t) idx.push_back({0, k - t, t});
  for (int t = 1; t < k; ++t) idx.push_back({t, 0, k - t});
  for (int a1 = 1; a1 < k; ++a1)
    for (int a2 = 1; a1 + a2 < k; ++a2) idx.push_back({k - a1 - a2, a1, a2});
  return idx;
}

inline int nodes_per_element(int k) { return (k + 1) * (k + 2) / 2; }

template <typename Scalar = double>
class ReferenceElement {
 public:
  using Bary = Eigen::Matrix<Scalar, 3, 1>;
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  /// Row i holds (∂φ_i/∂ξ, ∂φ_i/∂η).
  using Gradients = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

  explicit ReferenceElement(int degree) : degree_(degree) {
    if (degree < 1) throw PreconditionError("reference element degree must be >= 1");
    if (degree > kMaxDegree)
      throw CapacityError("reference element degree " + std::to_string(degree) +
                          " exceeds cap " + std::to_string(kMaxDegree));
    indices_ = lattice_indices(degree);
    for (const auto& a : indices_)
      nodes_.emplace_back(Scalar(a[0]) / degree, Scalar(a[1]) / degree, Scalar(a[2]) / degree);
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<std::array<int, 3>>& lattice() const { return indices_; }
  const std::vector<Bary>& node_barycentrics() const { return nodes_; }

  Values values(const Bary& lambda) const {
    Values out(size());
    for (int i = 0; i < size(); ++i) {
      Scalar v = 1;
      for (int c = 0; c < 3; ++c) v *= factor(indices_[i][c], lambda[c]);
      out[i] = v;
    }
    return out;
  }

  Gradients gradients(const Bary& lambda) const {
    Gradients out(size(), 2);
    for (int i = 0; i < size(); ++i) {
      std::array<Scalar, 3> f, df;
      for (int c = 0; c < 3; ++c) {
        f[c] = factor(indices_[i][c], lambda[c]);
        df[c] = dfactor(indices_[i][c], lambda[c]);
      }
      // ∂/∂λ_c of the product, then chain rule with λ0 = 1 − ξ − η.
      const Scalar d0 = df[0] * f[1] * f[2];
      const Scalar d1 = f[0] * df[1] * f[2];
      const Scalar d2 = f[0] * f[1] * df[2];
      out(i, 0) = d1 - d0;
      out(i, 1) = d2 - d0;
    }
    return out;
  }

 private:
  // Π_{m<a} (kλ − m)/(m + 1)
  Scalar factor(int a, Scalar lambda) const {
    Scalar v = 1;
    const Scalar s = degree_ * lambda;
    for (int m = 0; m < a; ++m) v *= (s - m) / (m + 1);
    return v;
  }
  Scalar dfactor(int a, Scalar lambda) const {
    const Scalar s = degree_ * lambda;
    Scalar sum = 0;
    for (int skip = 0; skip < a; ++skip) {
      Scalar v = Scalar(degree_) / (skip + 1);
      for (int m = 0; m < a; ++m)
        if (m != skip) v *= (s - m) / (m + 1);
      sum += v;
    }
    return sum;
  }

  int degree_;
  std::vector<std::array<int, 3>> indices_;
  std::vector<Bary> nodes_;
};

template <typename Scalar = double>
ReferenceElement<Scalar> make_reference(int degree) {
  return ReferenceElement<Scalar>(degree);
}

}  // namespace esfem
