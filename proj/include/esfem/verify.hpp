// Numerical evaluation of the structural identities behind the convergence
// analysis: matrix differences as θ-integrals over intermediate surfaces, the
// monotone decomposition, the trace functional, θ-uniform norm equivalence,
// and the consistency defect of the interpolated exact flow.
#pragma once

#include "esfem/assembly.hpp"
#include "esfem/exactflow.hpp"
#include "esfem/solver.hpp"
#include "esfem/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace esfem {

inline constexpr int kDefaultThetaOrder = 16;
/// Residual floor relative to the problem scale of each identity.
inline constexpr double kResidualFloor = 1e-13;

struct IdentityReport {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double abs_residual = 0;
  double rel_residual = 0;  ///< abs / max(|lhs|, |rhs|, floor·scale)
  double scale = 0;
  int theta_quadrature_order = 0;
  int surface_quadrature_exactness = 0;
  std::vector<std::pair<std::string, double>> breakdown;

  double part(const std::string& key) const;
};

/// wᵀ(M(x) − M(x*))z against ∫₀¹∫_{Γ_h^θ} w_h^θ·z_h^θ (∇_{Γ_h^θ}·e_h^θ), e = x − x*.
IdentityReport mass_difference_identity(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                        const NodalVector& x, const NodalVector& w, const NodalVector& z,
                                        int theta_order = kDefaultThetaOrder);

/// wᵀ(A(x)x − A(x*)x*) against ∫₀¹∫ ∇w : (D e)P + ∇w : ∇e with
/// D e = tr(E)I − (E + Eᵀ).
IdentityReport stiffness_difference_identity(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                             const NodalVector& x, const NodalVector& w,
                                             int theta_order = kDefaultThetaOrder);

/// (A(x)x − A(x*)x*)·(x − x*) against trace_part + normal_part, where
/// trace_part = ∫₀¹∫ tr(E)² − tr(EE) and normal_part = ∫₀¹∫ |E n̂|².
IdentityReport monotone_decomposition(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                      const NodalVector& x, int theta_order = kDefaultThetaOrder);

/// True when abs_residual is non-increasing along `reports` (increasing θ
/// orders) once above the floor kResidualFloor·scale.
bool residuals_settle(const std::vector<IdentityReport>& reports);

/// ∫_{Γ_h[x]} tr(E)² − tr(EE) with E = ∇_{Γ_h[x]} e_h.
double trace_functional(const SurfaceAssembler& assembler, const NodalVector& x_surface, const NodalVector& e);

struct RatioRange {
  double min = 0;
  double max = 0;
};

struct NormEquivalenceReport {
  double hypothesis_value = 0;  ///< discrete ‖∇_{Γ_h[x*]} e_h‖_{L∞} (Frobenius)
  int trials = 0;
  std::vector<double> thetas;
  RatioRange linf_value;  ///< ‖w_h^θ‖_{L∞(Γ_h^θ)} / ‖w_h^0‖_{L∞(Γ_h[x*])}
  RatioRange linf_gradient;
  RatioRange l2_value;
  RatioRange l2_gradient;
};

inline constexpr double kNormEquivalenceHypothesis = 0.5;

/// Ratios of value and gradient norms of random FE fields w between Γ_h^θ
/// and Γ_h[x*], x^θ = x* + θe. Rejects e with ‖∇e‖_{L∞} > 1/2 beyond rounding.
NormEquivalenceReport norm_equivalence_probe(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                             const NodalVector& e, int trials, const std::vector<double>& thetas,
                                             std::uint64_t seed);

struct DefectReport {
  double t = 0;
  NodalVector defect;
  double norm_M_defect = 0;
  double h = 0;
  double solve_residual = 0;  ///< ‖M d − (Mẋ* + Ax*)‖ / ‖Mẋ* + Ax*‖
};

/// Solves M(x*)d = M(x*)ẋ* + A(x*)x* for the interpolated exact sphere flow.
DefectReport defect(const SurfaceAssembler& assembler, const NodalVector& x0, const Sphere& solution, double t,
                    const LinearSolveParams& params = {});

struct EOCTable {
  std::vector<double> h;
  std::vector<double> values;
  std::vector<double> orders;  ///< orders[i] between rows i and i+1
};

/// orders_i = log(v_i/v_{i+1}) / log(h_i/h_{i+1}); h strictly decreasing,
/// values positive.
EOCTable eoc(const std::vector<std::pair<double, double>>& rows);

/// Seeded random nodal vector with max_j |e_j| = amplitude.
NodalVector random_field(Eigen::Index nodes, std::uint64_t seed, double amplitude);

nlohmann::json to_json(const IdentityReport& r);
nlohmann::json to_json(const NormEquivalenceReport& r);
nlohmann::json to_json(const DefectReport& r);
nlohmann::json to_json(const EOCTable& t);

/// Column names matching `csv_row`.
std::string identity_csv_header();
/// identity,h,k,theta_order,quad_exactness,lhs,rhs,abs_residual,rel_residual,parts
std::string csv_row(const IdentityReport& r, double h, int degree);

}  // namespace esfem
