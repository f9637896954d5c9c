#include "esfem/study.hpp"

#include "esfem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

namespace esfem {

void validate(const StudyConfig& c) {
  if (c.degrees.empty() || c.levels.empty()) throw PreconditionError("study needs degrees and levels");
  for (int k : c.degrees)
    if (k < 1 || k > kMaxDegree) throw PreconditionError("degree out of range: " + std::to_string(k));
  for (int l : c.levels)
    if (l < 0 || l > kMaxIcosphereLevel) throw PreconditionError("level out of range: " + std::to_string(l));
  if (!(c.initial_radius > 0)) throw PreconditionError("radius must be positive");
  if (!(c.t_end > 0)) throw PreconditionError("t_end must be positive");
  if (!(c.t_end < Sphere{c.initial_radius}.singular_time()))
    throw SingularTimeError("t_end is not before the singular time");
  if (!(c.tau_factor > 0)) throw PreconditionError("tau factor must be positive");
  if (c.min_steps < 1) throw PreconditionError("min_steps must be >= 1");
  if (c.max_halvings < 0) throw PreconditionError("max_halvings must be >= 0");
  if (!(c.guard_tolerance > 0)) throw PreconditionError("guard tolerance must be positive");
  if (c.scheme == Scheme::semidiscrete_bdf3 && c.min_steps < 3)
    throw PreconditionError("bdf3 needs min_steps >= 3");
}

double study_tau(const StudyConfig& c, const SurfaceAssembler& assembler, const NodalVector& x0, double h) {
  double tau = std::min(c.tau_factor * h * h, c.t_end / c.min_steps);
  if (c.scheme == Scheme::semidiscrete_rk4) tau = std::min(tau, rk4_stable_step(assembler, x0));
  return tau;
}

double interpolation_probe(const Vec3& p) { return p.x() * p.x(); }

StudyCell run_study_cell(const StudyConfig& c, int degree, int level) {
  const auto start = std::chrono::steady_clock::now();
  const Sphere sol{c.initial_radius};
  auto [mesh, x0] = build_icosphere(level, degree, c.initial_radius);
  const SurfaceAssembler assembler(mesh, c.quadrature_exactness);

  StudyCell cell;
  cell.degree = degree;
  cell.level = level;
  cell.nodes = mesh.node_count;
  cell.h = mesh_size(mesh, x0).h_max;

  FlowConfig flow;
  flow.scheme = c.scheme;
  flow.t_end = c.t_end;
  flow.tau = study_tau(c, assembler, x0, cell.h);
  flow.linear = c.linear;

  auto run = [&](double tau) {
    flow.tau = tau;
    return run_flow(assembler, x0, flow, &sol);
  };
  FlowTrajectory traj = run(flow.tau);
  FlowmapError err;
  if (!traj.degenerated) err = flowmap_error(assembler, x0, traj.final_state(), sol, c.t_end);
  for (int halving = 1; halving <= c.max_halvings && !traj.degenerated; ++halving) {
    FlowTrajectory finer = run(traj.tau / 2);
    if (finer.degenerated) {
      traj = std::move(finer);
      break;
    }
    const FlowmapError finer_err = flowmap_error(assembler, x0, finer.final_state(), sol, c.t_end);
    cell.guard_change = std::abs(finer_err.l2_error - err.l2_error) / finer_err.l2_error;
    cell.halvings = halving;
    traj = std::move(finer);
    err = finer_err;
    if (cell.guard_change < c.guard_tolerance) {
      cell.guard_passed = true;
      break;
    }
  }

  cell.tau = traj.tau;
  cell.steps = static_cast<int>(traj.diagnostics.size()) - 1;
  cell.degenerated = traj.degenerated;
  cell.abort_reason = traj.abort_reason;
  for (std::size_t i = 1; i < traj.diagnostics.size(); ++i) {
    const double rise = traj.diagnostics[i].area - traj.diagnostics[i - 1].area;
    if (rise > 0) {
      cell.area_monotone = false;
      cell.max_area_increase = std::max(cell.max_area_increase, rise);
    }
  }
  cell.final_area = traj.diagnostics.back().area;
  const double r = sol.radius(c.t_end);
  cell.exact_area = 4 * std::numbers::pi * r * r;
  cell.area_error = std::abs(cell.final_area - cell.exact_area);
  cell.error = err;

  cell.defect_norm = defect(assembler, x0, sol, c.t_end, c.linear).norm_M_defect;
  cell.geometry = geometric_errors(assembler, exact_nodal(x0, sol, c.t_end), sol, c.t_end, interpolation_probe);
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

std::vector<StudyCell> run_study(const StudyConfig& c, const StudyProgress& progress) {
  validate(c);
  std::vector<std::pair<int, int>> jobs;
  for (int k : c.degrees)
    for (int l : c.levels) jobs.emplace_back(k, l);
  std::vector<StudyCell> cells(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex lock;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        cells[i] = run_study_cell(c, jobs[i].first, jobs[i].second);
        if (progress) {
          std::lock_guard guard(lock);
          progress(cells[i]);
        }
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(c.threads, 1, static_cast<int>(jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return cells;
}

std::vector<StudyCell> cells_of_degree(const std::vector<StudyCell>& cells, int degree) {
  std::vector<StudyCell> out;
  for (const auto& cell : cells)
    if (cell.degree == degree) out.push_back(cell);
  std::sort(out.begin(), out.end(), [](const StudyCell& a, const StudyCell& b) { return a.level < b.level; });
  return out;
}

EOCTable study_eoc(const std::vector<StudyCell>& cells, const std::function<double(const StudyCell&)>& value) {
  std::vector<std::pair<double, double>> rows;
  for (const auto& cell : cells) rows.emplace_back(cell.h, value(cell));
  return eoc(rows);
}

nlohmann::json to_json(const StudyCell& c) {
  return {{"degree", c.degree},
          {"level", c.level},
          {"nodes", c.nodes},
          {"h", c.h},
          {"tau", c.tau},
          {"steps", c.steps},
          {"halvings", c.halvings},
          {"guard_change", std::isnan(c.guard_change) ? nlohmann::json() : nlohmann::json(c.guard_change)},
          {"guard_passed", c.guard_passed},
          {"l2_error", c.error.l2_error},
          {"max_nodal_error", c.error.max_nodal_error},
          {"defect_norm", c.defect_norm},
          {"sup_one_minus_delta", c.geometry.sup_one_minus_delta},
          {"sup_normal_error", c.geometry.sup_normal_error},
          {"interp_L2_error", c.geometry.interp_L2_error},
          {"final_area", c.final_area},
          {"exact_area", c.exact_area},
          {"area_error", c.area_error},
          {"area_monotone", c.area_monotone},
          {"max_area_increase", c.max_area_increase},
          {"degenerated", c.degenerated},
          {"abort_reason", c.abort_reason},
          {"seconds", c.seconds}};
}

nlohmann::json to_json(const StudyConfig& c) {
  return {{"degrees", c.degrees},
          {"levels", c.levels},
          {"radius", c.initial_radius},
          {"t_end", c.t_end},
          {"scheme", to_string(c.scheme)},
          {"tau_factor", c.tau_factor},
          {"min_steps", c.min_steps},
          {"guard_tolerance", c.guard_tolerance},
          {"max_halvings", c.max_halvings},
          {"quadrature_exactness", c.quadrature_exactness},
          {"cg_tolerance", c.linear.tolerance},
          {"cg_max_iterations", c.linear.max_iterations}};
}

}  // namespace esfem
