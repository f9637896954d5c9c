// Time integration of M(x)ẋ + A(x)x = 0: a classical RK4 reference for the
// semidiscrete flow and the linearly implicit Euler scheme.
#pragma once

#include "esfem/assembly.hpp"
#include "esfem/exactflow.hpp"
#include "esfem/types.hpp"

#include <array>
#include <span>
#include <functional>
#include <string>
#include <vector>

namespace esfem {

struct LinearSolveParams {
  double tolerance = 1e-12;  ///< relative residual ‖b − Mx‖/‖b‖ per component
  int max_iterations = 10000;
  bool check_spd = true;
};

struct SolveStats {
  int iterations = 0;  ///< summed over the three components
  double residual = 0;  ///< worst component relative residual
};

/// Jacobi-preconditioned conjugate gradients, one solve per component.
/// Throws PreconditionError when the SPD probe fails (non-positive diagonal,
/// or a probe vector with vᵀMv ≤ 1e−10·Σ M_ii v_i², which catches the
/// constant kernel of a stiffness matrix) and IterationError when the
/// tolerance is not reached.
NodalVector solve_spd(const SparseSymMatrix& matrix, const NodalVector& rhs, const LinearSolveParams& params,
                      SolveStats* stats = nullptr, const NodalVector* guess = nullptr);

/// ẋ = −M(x)⁻¹A(x)x.
NodalVector semidiscrete_rhs(const SurfaceAssembler& assembler, const NodalVector& x,
                             const LinearSolveParams& params, SolveStats* stats = nullptr,
                             const NodalVector* guess = nullptr);

/// One classical four-stage Runge–Kutta step of the semidiscrete system.
/// `velocity_guess`, if given, warm-starts the mass solves and receives the
/// last stage velocity.
NodalVector step_rk4(const SurfaceAssembler& assembler, const NodalVector& x, double tau,
                     const LinearSolveParams& params, SolveStats* stats = nullptr,
                     NodalVector* velocity_guess = nullptr);

/// Solves (M(x^{n−1}) + τA(x^{n−1}))x^n = M(x^{n−1})x^{n−1}.
NodalVector step_limplicit_euler(const SurfaceAssembler& assembler, const NodalVector& x_prev, double tau,
                                 const LinearSolveParams& params, SolveStats* stats = nullptr);

/// Upper bound on the largest eigenvalue of M(x)⁻¹A(x), from the largest
/// element-local generalized eigenvalue.
double stiffness_eigenvalue_bound(const SurfaceAssembler& assembler, const NodalVector& x);

/// Length of the negative real interval inside the RK4 stability region.
inline constexpr double kRk4StabilityInterval = 2.785;

/// Linearly implicit BDF step of order q = history.size() in 1..4: with x̃ the
/// polynomial extrapolation of the history, solves (δ₀M(x̃) + τA(x̃))x^n = −M(x̃)Σ δ_j x^{n−j}.
/// `history` holds x^{n−1}, ..., x^{n−q} in that order. Order 1 is the linearly implicit Euler step.
NodalVector step_limplicit_bdf(const SurfaceAssembler& assembler, std::span<const NodalVector* const> history,
                                double tau, const LinearSolveParams& params, SolveStats* stats = nullptr);

/// Largest RK4 step for which τ·λ_max(M⁻¹A) stays inside the stability
/// interval with a safety factor of 0.8.
double rk4_stable_step(const SurfaceAssembler& assembler, const NodalVector& x);

/// semidiscrete_bdf3 integrates the same ODE as semidiscrete_rk4 without the
/// explicit stability restriction; its first two steps are taken with
/// RK4 sub-steps inside the RK4 stability limit.
enum class Scheme { semidiscrete_rk4, linearly_implicit_euler, semidiscrete_bdf3 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct FlowConfig {
  Scheme scheme = Scheme::semidiscrete_rk4;
  double t_end = 0.05;
  double tau = 1e-3;  ///< rounded down so that t_end is a whole number of steps
  LinearSolveParams linear;
  double quality_abort_threshold = kDegeneracyQuality;
  int snapshot_stride = 0;  ///< 0 keeps only the initial and final states
};

struct StepDiagnostics {
  int step = 0;
  double t = 0;
  double area = 0;
  double min_quality = 0;
  int cg_iterations = 0;
};

struct FlowTrajectory {
  std::vector<double> times;  ///< of the stored snapshots
  std::vector<int> snapshot_steps;
  std::vector<NodalVector> snapshots;
  std::vector<StepDiagnostics> diagnostics;  ///< one row per step, row 0 = initial state
  double tau = 0;
  bool degenerated = false;
  std::string abort_reason;

  const NodalVector& final_state() const { return snapshots.back(); }
  double final_time() const { return times.back(); }
};

/// Throws PreconditionError for an invalid config (τ ≤ 0, τ > t_end, or
/// t_end at or past the singular time when `solution` is given).
void validate(const FlowConfig& config, const Sphere* solution);

using StepObserver = std::function<void(const StepDiagnostics&, const NodalVector&)>;

/// Integrates from x(0) = x0 to t_end. Stops early, with `degenerated` set and
/// the partial trajectory returned, when the element quality drops below the
/// configured threshold.
FlowTrajectory run_flow(const SurfaceAssembler& assembler, const NodalVector& x0, const FlowConfig& config,
                        const Sphere* solution = nullptr, const StepObserver& observer = {});

}  // namespace esfem
