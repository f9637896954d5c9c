#include "esfem/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <random>

namespace esfem {

namespace {

void probe_spd(const SparseSymMatrix& m) {
  const Eigen::VectorXd diag = m.diagonal();
  if (!(diag.minCoeff() > 0)) throw PreconditionError("solve_spd: matrix has a non-positive diagonal entry");
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int p = 0; p < 3; ++p) {
    Eigen::VectorXd v(m.rows());
    if (p == 0)
      v.setOnes();
    else
      for (auto& c : v) c = uni(rng);
    const double q = v.dot(m * v);
    const double ref = (diag.array() * v.array().square()).sum();
    if (!(q > 1e-10 * ref)) throw PreconditionError("solve_spd: matrix failed the positive-definiteness probe");
  }
}

SparseSymMatrix combine(const SparseSymMatrix& m, double alpha, const SparseSymMatrix& a, double beta) {
  SparseSymMatrix out = m;
  // Same pattern, so the value arrays line up.
  Eigen::Map<Eigen::VectorXd> v(out.valuePtr(), out.nonZeros());
  v = alpha * Eigen::Map<const Eigen::VectorXd>(m.valuePtr(), m.nonZeros()) +
      beta * Eigen::Map<const Eigen::VectorXd>(a.valuePtr(), a.nonZeros());
  return out;
}

}  // namespace

NodalVector solve_spd(const SparseSymMatrix& matrix, const NodalVector& rhs, const LinearSolveParams& params,
                      SolveStats* stats, const NodalVector* guess) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.rows())
    throw PreconditionError("solve_spd: dimension mismatch");
  if (params.check_spd) probe_spd(matrix);
  Eigen::ConjugateGradient<SparseSymMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(params.tolerance);
  cg.setMaxIterations(params.max_iterations);
  cg.compute(matrix);
  NodalVector out(rhs.rows(), 3);
  SolveStats local;
  for (int c = 0; c < 3; ++c) {
    if (guess && guess->rows() == rhs.rows())
      out.col(c) = cg.solveWithGuess(rhs.col(c), guess->col(c));
    else
      out.col(c) = cg.solve(rhs.col(c));
    local.iterations += static_cast<int>(cg.iterations());
    local.residual = std::max(local.residual, cg.error());
    if (cg.info() != Eigen::Success)
      throw IterationError("conjugate gradients did not converge: relative residual " + std::to_string(cg.error()) +
                               " after " + std::to_string(cg.iterations()) + " iterations",
                           local.iterations, cg.error());
  }
  if (stats) {
    stats->iterations += local.iterations;
    stats->residual = std::max(stats->residual, local.residual);
  }
  return out;
}

NodalVector semidiscrete_rhs(const SurfaceAssembler& assembler, const NodalVector& x, const LinearSolveParams& params,
                             SolveStats* stats, const NodalVector* guess) {
  const SparseSymMatrix m = assembler.mass(x);
  const NodalVector ax = assembler.apply_Ax(x);
  return solve_spd(m, -ax, params, stats, guess);
}

NodalVector step_rk4(const SurfaceAssembler& assembler, const NodalVector& x, double tau,
                     const LinearSolveParams& params, SolveStats* stats, NodalVector* velocity_guess) {
  if (!(tau >= 0)) throw PreconditionError("RK4 needs tau >= 0");
  if (tau == 0) return x;
  const NodalVector* g = velocity_guess;
  const NodalVector k1 = semidiscrete_rhs(assembler, x, params, stats, g);
  const NodalVector k2 = semidiscrete_rhs(assembler, x + (0.5 * tau) * k1, params, stats, &k1);
  const NodalVector k3 = semidiscrete_rhs(assembler, x + (0.5 * tau) * k2, params, stats, &k2);
  const NodalVector k4 = semidiscrete_rhs(assembler, x + tau * k3, params, stats, &k3);
  if (velocity_guess) *velocity_guess = k4;
  return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

NodalVector step_limplicit_euler(const SurfaceAssembler& assembler, const NodalVector& x_prev, double tau,
                                 const LinearSolveParams& params, SolveStats* stats) {
  if (!(tau > 0)) throw PreconditionError("linearly implicit Euler needs tau > 0");
  SparseSymMatrix m, a;
  assembler.mass_and_stiffness(x_prev, m, a);
  const NodalVector rhs = m * x_prev;
  return solve_spd(combine(m, 1.0, a, tau), rhs, params, stats, &x_prev);
}

NodalVector step_limplicit_bdf(const SurfaceAssembler& assembler, std::span<const NodalVector* const> history,
                               double tau, const LinearSolveParams& params, SolveStats* stats) {
  static constexpr double kLead[] = {1.0, 1.5, 11.0 / 6.0, 25.0 / 12.0};
  static constexpr double kPast[][4] = {{-1.0, 0, 0, 0},
                                        {-2.0, 0.5, 0, 0},
                                        {-3.0, 1.5, -1.0 / 3.0, 0},
                                        {-4.0, 3.0, -4.0 / 3.0, 0.25}};
  static constexpr double kExtrapolation[][4] = {
      {1.0, 0, 0, 0}, {2.0, -1.0, 0, 0}, {3.0, -3.0, 1.0, 0}, {4.0, -6.0, 4.0, -1.0}};
  const int q = static_cast<int>(history.size());
  if (q < 1 || q > 4) throw PreconditionError("BDF order must be in 1..4");
  if (!(tau > 0)) throw PreconditionError("BDF needs tau > 0");
  NodalVector extrapolated = NodalVector::Zero(history[0]->rows(), 3);
  NodalVector past = NodalVector::Zero(history[0]->rows(), 3);
  for (int j = 0; j < q; ++j) {
    extrapolated += kExtrapolation[q - 1][j] * *history[j];
    past += kPast[q - 1][j] * *history[j];
  }
  SparseSymMatrix m, a;
  assembler.mass_and_stiffness(extrapolated, m, a);
  const NodalVector rhs = -(m * past);
  return solve_spd(combine(m, kLead[q - 1], a, tau), rhs, params, stats, &extrapolated);
}

double rk4_stable_step(const SurfaceAssembler& assembler, const NodalVector& x) {
  return 0.8 * kRk4StabilityInterval / stiffness_eigenvalue_bound(assembler, x);
}

double stiffness_eigenvalue_bound(const SurfaceAssembler& assembler, const NodalVector& x) {
  const int n = assembler.mesh().nodes_per_element();
  const auto& table = assembler.quadrature_table();
  Eigen::MatrixXd m_loc(n, n), a_loc(n, n);
  double bound = 0;
  Eigen::Index current = -1;
  auto flush = [&] {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a_loc, m_loc, Eigen::EigenvaluesOnly);
    bound = std::max(bound, es.eigenvalues().maxCoeff());
  };
  assembler.for_each_point(x, table, [&](Eigen::Index e, std::size_t q, double w, const ElementPointFrame<double>& f) {
    if (e != current) {
      if (current >= 0) flush();
      current = e;
      m_loc.setZero();
      a_loc.setZero();
    }
    const double wa = w * f.area_element;
    const Eigen::VectorXd phi = table.values.row(q).transpose();
    m_loc.noalias() += wa * phi * phi.transpose();
    a_loc.noalias() += wa * f.basis_gradients.transpose() * f.basis_gradients;
  });
  if (current >= 0) flush();
  return bound;
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::semidiscrete_rk4: return "rk4";
    case Scheme::linearly_implicit_euler: return "limplicit";
    case Scheme::semidiscrete_bdf3: return "bdf3";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "rk4" || s == "semidiscrete_rk4") return Scheme::semidiscrete_rk4;
  if (s == "limplicit" || s == "linearly_implicit_euler") return Scheme::linearly_implicit_euler;
  if (s == "bdf3" || s == "semidiscrete_bdf3") return Scheme::semidiscrete_bdf3;
  throw PreconditionError("unknown scheme '" + s + "'");
}

void validate(const FlowConfig& c, const Sphere* solution) {
  if (!(c.t_end > 0)) throw PreconditionError("t_end must be positive");
  if (!(c.tau > 0)) throw PreconditionError("tau must be positive");
  if (c.tau > c.t_end) throw PreconditionError("tau must not exceed t_end");
  if (solution && !(c.t_end < solution->singular_time()))
    throw SingularTimeError("t_end = " + std::to_string(c.t_end) + " is not before the singular time " +
                            std::to_string(solution->singular_time()));
  if (c.snapshot_stride < 0) throw PreconditionError("snapshot stride must be >= 0");
}

FlowTrajectory run_flow(const SurfaceAssembler& assembler, const NodalVector& x0, const FlowConfig& config,
                        const Sphere* solution, const StepObserver& observer) {
  validate(config, solution);
  const SurfaceMesh& mesh = assembler.mesh();
  const int steps = std::max(1, static_cast<int>(std::ceil(config.t_end / config.tau - 1e-9)));
  const double tau = config.t_end / steps;

  FlowTrajectory traj;
  traj.tau = tau;
  auto diagnose = [&](int step, double t, const NodalVector& x, int iters) {
    StepDiagnostics d;
    d.step = step;
    d.t = t;
    d.area = assembler.area(x);
    d.min_quality = mesh_size(mesh, x).quality;
    d.cg_iterations = iters;
    traj.diagnostics.push_back(d);
    if (observer) observer(d, x);
    return d;
  };
  auto store = [&](int step, double t, const NodalVector& x) {
    traj.snapshot_steps.push_back(step);
    traj.times.push_back(t);
    traj.snapshots.push_back(x);
  };

  if (config.scheme == Scheme::semidiscrete_bdf3 && steps < 3)
    throw PreconditionError("bdf3 needs at least 3 steps");

  NodalVector x = x0;
  store(0, 0.0, x);
  diagnose(0, 0.0, x, 0);
  NodalVector velocity;
  std::array<NodalVector, 3> history;  // x^{n−1} ... x^{n−3}
  history[0] = x0;
  int startup_substeps = 1;
  if (config.scheme == Scheme::semidiscrete_bdf3)
    startup_substeps = std::max(1, static_cast<int>(std::ceil(tau / rk4_stable_step(assembler, x0))));
  for (int step = 1; step <= steps; ++step) {
    SolveStats stats;
    switch (config.scheme) {
      case Scheme::semidiscrete_rk4:
        x = step_rk4(assembler, x, tau, config.linear, &stats, &velocity);
        break;
      case Scheme::linearly_implicit_euler:
        x = step_limplicit_euler(assembler, x, tau, config.linear, &stats);
        break;
      case Scheme::semidiscrete_bdf3:
        if (step < 3) {
          for (int sub = 0; sub < startup_substeps; ++sub)
            x = step_rk4(assembler, x, tau / startup_substeps, config.linear, &stats, &velocity);
        } else {
          {
            const std::array<const NodalVector*, 3> h{&history[0], &history[1], &history[2]};
            x = step_limplicit_bdf(assembler, h, tau, config.linear, &stats);
          }
        }
        std::rotate(history.rbegin(), history.rbegin() + 1, history.rend());
        history[0] = x;
        break;
    }
    const double t = step == steps ? config.t_end : step * tau;
    StepDiagnostics d;
    try {
      d = diagnose(step, t, x, stats.iterations);
    } catch (const GeometryError& err) {
      traj.degenerated = true;
      traj.abort_reason = "step " + std::to_string(step) + ": " + err.what();
      store(step, t, x);
      return traj;
    }
    if (d.min_quality < config.quality_abort_threshold) {
      traj.degenerated = true;
      traj.abort_reason = "step " + std::to_string(step) + ": element quality " + std::to_string(d.min_quality) +
                          " below " + std::to_string(config.quality_abort_threshold);
      store(step, t, x);
      return traj;
    }
    if (step == steps || (config.snapshot_stride > 0 && step % config.snapshot_stride == 0)) store(step, t, x);
  }
  return traj;
}

}  // namespace esfem
