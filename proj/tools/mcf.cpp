// mcf: batch front-end for mesh generation, flow runs, convergence studies
// and identity verification on the sphere.
#include "esfem/io.hpp"
#include "esfem/mesh.hpp"
#include "esfem/solver.hpp"
#include "esfem/study.hpp"
#include "esfem/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace esfem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3, kInvariant = 4 };

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw PreconditionError("cannot write " + path.string());
  return os;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

int thread_cap() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MCF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// mesh ---------------------------------------------------------------------

struct MeshArgs {
  int level = 2;
  int degree = 1;
  double radius = 1.0;
  std::string out = "mesh.json";
};

int cmd_mesh(const MeshArgs& a) {
  auto [mesh, x] = build_icosphere(a.level, a.degree, a.radius);
  write_mesh_json(a.out, mesh, x);
  std::cout << "nodes " << mesh.node_count << " elements " << mesh.element_count() << " degree " << mesh.degree
            << " level " << mesh.level << '\n';
  return kOk;
}

// run ----------------------------------------------------------------------

struct RunArgs {
  int level = 3;
  int degree = 1;
  double radius = 1.0;
  std::string mesh_file;
  std::string scheme = "rk4";
  double t_end = 0.05;
  double tau = 1e-4;
  double cg_tolerance = 1e-12;
  int cg_max_iterations = 10000;
  double quality_abort = kDegeneracyQuality;
  int snapshot_stride = 0;
  int quadrature = -1;
  std::string out_dir = "run";
};

// Sphere of radius |x_0| when every node lies on it.
std::optional<Sphere> sphere_of(const NodalVector& x) {
  const double r = x.row(0).norm();
  if (!(r > 0)) return std::nullopt;
  const Eigen::VectorXd radii = x.rowwise().norm();
  if ((radii.array() - r).abs().maxCoeff() > kOnSphereTolerance * r) return std::nullopt;
  return Sphere{r};
}

int cmd_run(const RunArgs& a) {
  MeshWithPositions m =
      a.mesh_file.empty() ? build_icosphere(a.level, a.degree, a.radius) : read_mesh_json(a.mesh_file);
  const std::optional<Sphere> sol = sphere_of(m.positions);
  FlowConfig cfg;
  cfg.scheme = scheme_from_string(a.scheme);
  cfg.t_end = a.t_end;
  cfg.tau = a.tau;
  cfg.linear.tolerance = a.cg_tolerance;
  cfg.linear.max_iterations = a.cg_max_iterations;
  cfg.quality_abort_threshold = a.quality_abort;
  cfg.snapshot_stride = a.snapshot_stride;
  validate(cfg, sol ? &*sol : nullptr);

  const SurfaceAssembler assembler(m.mesh, a.quadrature);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  nlohmann::json config = {{"command", "run"},
                           {"degree", m.mesh.degree},
                           {"level", m.mesh.level},
                           {"radius", sol ? sol->initial_radius : 0.0},
                           {"mesh_file", a.mesh_file},
                           {"scheme", to_string(cfg.scheme)},
                           {"t_end", cfg.t_end},
                           {"tau", cfg.tau},
                           {"cg_tolerance", cfg.linear.tolerance},
                           {"cg_max_iterations", cfg.linear.max_iterations},
                           {"quality_abort", cfg.quality_abort_threshold},
                           {"snapshot_stride", cfg.snapshot_stride},
                           {"quadrature_exactness", assembler.quadrature_exactness()}};
  std::vector<std::string> columns{"step", "t", "area", "min_quality", "cg_iterations"};
  if (sol) columns.insert(columns.end(), {"l2_error", "max_nodal_error"});

  auto csv = open_output(dir / "trajectory.csv");
  csv << csv_preamble(config.dump(), columns);
  bool area_monotone = true;
  double last_area = 0;
  auto observer = [&](const StepDiagnostics& d, const NodalVector& x) {
    if (d.step > 0 && d.area > last_area) area_monotone = false;
    last_area = d.area;
    csv << d.step << ',' << format_scientific(d.t) << ',' << format_scientific(d.area) << ','
        << format_scientific(d.min_quality) << ',' << d.cg_iterations;
    if (sol) {
      const FlowmapError err = flowmap_error(assembler, m.positions, x, *sol, d.t);
      csv << ',' << format_scientific(err.l2_error) << ',' << format_scientific(err.max_nodal_error);
    }
    csv << '\n';
  };
  const FlowTrajectory traj = run_flow(assembler, m.positions, cfg, sol ? &*sol : nullptr, observer);

  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    nlohmann::json snap = mesh_to_json(m.mesh, traj.snapshots[i]);
    snap["step"] = traj.snapshot_steps[i];
    snap["t"] = traj.times[i];
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%06d.json", traj.snapshot_steps[i]);
    open_output(dir / name) << snap.dump() << '\n';
  }

  nlohmann::json final = {{"config", config},
                          {"config_hash", config_hash(config.dump())},
                          {"version", kToolVersion},
                          {"steps", static_cast<int>(traj.diagnostics.size()) - 1},
                          {"tau", traj.tau},
                          {"t", traj.final_time()},
                          {"area", traj.diagnostics.back().area},
                          {"area_monotone", area_monotone},
                          {"degenerated", traj.degenerated},
                          {"abort_reason", traj.abort_reason}};
  if (sol && !traj.degenerated) {
    const FlowmapError err = flowmap_error(assembler, m.positions, traj.final_state(), *sol, traj.final_time());
    final["l2_error"] = err.l2_error;
    final["max_nodal_error"] = err.max_nodal_error;
    final["exact_radius"] = sol->radius(traj.final_time());
  }
  final["state"] = mesh_to_json(m.mesh, traj.final_state());
  open_output(dir / "final.json") << final.dump(1) << '\n';

  std::cout << "steps " << final["steps"] << " tau " << format_scientific(traj.tau) << " area "
            << format_scientific(traj.diagnostics.back().area);
  if (final.contains("l2_error")) std::cout << " l2_error " << format_scientific(final["l2_error"].get<double>());
  std::cout << '\n';
  if (traj.degenerated) {
    std::cerr << "mcf: run aborted: " << traj.abort_reason << '\n';
    return kNumerical;
  }
  return kOk;
}

// convergence ----------------------------------------------------------------

struct ConvergenceArgs {
  StudyConfig study;
  std::string scheme = "bdf3";
  std::string out_dir = "convergence";
};

struct Quantity {
  const char* name;
  double (*value)(const StudyCell&);
};

constexpr Quantity kQuantities[] = {
    {"l2_error", [](const StudyCell& c) { return c.error.l2_error; }},
    {"max_nodal_error", [](const StudyCell& c) { return c.error.max_nodal_error; }},
    {"defect_norm", [](const StudyCell& c) { return c.defect_norm; }},
    {"sup_one_minus_delta", [](const StudyCell& c) { return c.geometry.sup_one_minus_delta; }},
    {"sup_normal_error", [](const StudyCell& c) { return c.geometry.sup_normal_error; }},
    {"interp_L2_error", [](const StudyCell& c) { return c.geometry.interp_L2_error; }},
    {"area_error", [](const StudyCell& c) { return c.area_error; }},
};

const char* kPlotScript = R"(import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "cells.csv"
rows = [r for r in csv.DictReader(line for line in open(path) if not line.startswith("#"))]
quantities = ["l2_error", "max_nodal_error", "defect_norm", "sup_one_minus_delta",
              "sup_normal_error", "interp_L2_error", "area_error"]
fig, axes = plt.subplots(2, 4, figsize=(16, 8))
for ax, q in zip(axes.flat, quantities):
    series = defaultdict(list)
    for r in rows:
        series[int(r["degree"])].append((float(r["h"]), float(r[q])))
    for k, pts in sorted(series.items()):
        pts.sort()
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"k={k}")
    ax.set_title(q)
    ax.set_xlabel("h")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
axes.flat[-1].axis("off")
fig.tight_layout()
fig.savefig("convergence.png", dpi=120)
)";

int cmd_convergence(ConvergenceArgs a) {
  a.study.scheme = scheme_from_string(a.scheme);
  a.study.threads = std::min(a.study.threads, thread_cap());
  validate(a.study);
  const nlohmann::json config = to_json(a.study);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);

  const std::vector<StudyCell> cells = run_study(a.study, [](const StudyCell& c) {
    std::cout << "k=" << c.degree << " level=" << c.level << " h=" << format_scientific(c.h)
              << " tau=" << format_scientific(c.tau) << " l2_error=" << format_scientific(c.error.l2_error)
              << " guard=" << format_scientific(c.guard_change) << " seconds=" << c.seconds << std::endl;
  });

  std::vector<std::string> columns{"degree", "level", "nodes", "h", "tau", "steps", "halvings", "guard_change"};
  for (const auto& q : kQuantities) columns.push_back(q.name);
  columns.insert(columns.end(), {"final_area", "exact_area", "area_monotone", "seconds"});
  auto cells_csv = open_output(dir / "cells.csv");
  cells_csv << csv_preamble(config.dump(), columns);
  for (const auto& c : cells) {
    cells_csv << c.degree << ',' << c.level << ',' << c.nodes << ',' << format_scientific(c.h) << ','
              << format_scientific(c.tau) << ',' << c.steps << ',' << c.halvings << ','
              << format_scientific(c.guard_change);
    for (const auto& q : kQuantities) cells_csv << ',' << format_scientific(q.value(c));
    cells_csv << ',' << format_scientific(c.final_area) << ',' << format_scientific(c.exact_area) << ','
              << (c.area_monotone ? 1 : 0) << ',' << format_scientific(c.seconds) << '\n';
  }

  auto eoc_csv = open_output(dir / "eoc.csv");
  eoc_csv << csv_preamble(config.dump(), {"degree", "quantity", "level", "h", "value", "order"});
  nlohmann::json tables;
  for (int k : a.study.degrees) {
    const auto rows = cells_of_degree(cells, k);
    for (const auto& q : kQuantities) {
      std::vector<double> orders(rows.size(), std::nan(""));
      bool positive = rows.size() >= 2;
      for (const auto& c : rows) positive = positive && q.value(c) > 0;
      if (positive) {
        const EOCTable t = study_eoc(rows, q.value);
        std::copy(t.orders.begin(), t.orders.end(), orders.begin() + 1);
        tables[std::to_string(k)][q.name] = to_json(t);
      }
      for (std::size_t i = 0; i < rows.size(); ++i)
        eoc_csv << k << ',' << q.name << ',' << rows[i].level << ',' << format_scientific(rows[i].h) << ','
                << format_scientific(q.value(rows[i])) << ',' << format_scientific(orders[i]) << '\n';
    }
  }

  nlohmann::json study = {{"config", config}, {"config_hash", config_hash(config.dump())},
                          {"version", kToolVersion}, {"eoc", tables}};
  for (const auto& c : cells) study["cells"].push_back(to_json(c));
  open_output(dir / "study.json") << study.dump(1) << '\n';
  open_output(dir / "plot_convergence.py") << kPlotScript;

  int code = kOk;
  for (const auto& c : cells) {
    if (c.degenerated) {
      std::cerr << "mcf: k=" << c.degree << " level=" << c.level << " aborted: " << c.abort_reason << '\n';
      return kNumerical;
    }
    if (!c.area_monotone) {
      std::cerr << "mcf: k=" << c.degree << " level=" << c.level << " area increased by "
                << format_scientific(c.max_area_increase) << '\n';
      code = kInvariant;
    }
    if (a.study.max_halvings > 0 && !c.guard_passed) {
      std::cerr << "mcf: k=" << c.degree << " level=" << c.level << " tau guard change "
                << format_scientific(c.guard_change) << " above tolerance\n";
      code = kInvariant;
    }
  }
  return code;
}

// verify -------------------------------------------------------------------

struct VerifyArgs {
  std::string identity;
  int degree = 1;
  int level = 2;
  double radius = 1.0;
  int trials = 10;
  std::vector<int> theta_orders{2, 4, 8, 16};
  double amplitude = 0.05;  ///< ‖e‖∞ in units of h
  std::string field = "random";
  double scale = 0.01;
  double gradient = 0.5;  ///< ‖∇e‖∞ for normequiv
  std::vector<double> thetas{0, 0.25, 0.5, 0.75, 1};
  double t = 0.05;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  double linf_bound = 2.05;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  static const std::vector<std::string> kIdentities{"massdiff", "stiffdiff", "monotone",
                                                    "trace",    "normequiv", "defect"};
  if (std::find(kIdentities.begin(), kIdentities.end(), a.identity) == kIdentities.end())
    throw PreconditionError("unknown identity '" + a.identity + "'; expected one of " + join(kIdentities));
  if (a.trials < 1) throw PreconditionError("--trials must be >= 1");
  if (a.theta_orders.empty()) throw PreconditionError("--theta-orders must not be empty");
  for (int q : a.theta_orders)
    if (q < 1) throw PreconditionError("theta orders must be >= 1");
  auto [mesh, x_star] = build_icosphere(a.level, a.degree, a.radius);
  const SurfaceAssembler assembler(mesh);
  const double h = mesh_size(mesh, x_star).h_max;
  const nlohmann::json config = {{"command", "verify"}, {"identity", a.identity}, {"degree", a.degree},
                                 {"level", a.level},     {"radius", a.radius},    {"trials", a.trials},
                                 {"theta_orders", a.theta_orders}, {"amplitude", a.amplitude},
                                 {"field", a.field},     {"scale", a.scale},      {"gradient", a.gradient},
                                 {"thetas", a.thetas},   {"t", a.t},              {"seed", a.seed}};

  std::ofstream file;
  if (!a.out.empty()) file = open_output(a.out);
  std::ostream& os = a.out.empty() ? std::cout : file;
  std::vector<std::string> columns{"trial"};
  {
    std::stringstream header(identity_csv_header());
    for (std::string col; std::getline(header, col, ',');) columns.push_back(col);
  }
  os << csv_preamble(config.dump(), columns);
  auto emit = [&](int trial, const IdentityReport& r) { os << trial << ',' << csv_row(r, h, a.degree) << '\n'; };

  bool violated = false;
  auto fail = [&](const std::string& what) {
    std::cerr << "mcf: " << a.identity << ": " << what << '\n';
    violated = true;
  };
  auto perturbed = [&](int trial) -> NodalVector {
    if (a.field == "scaling") return (1 + a.scale) * x_star;
    if (a.field == "zero") return x_star;
    if (a.field != "random") throw PreconditionError("--field must be random, scaling or zero here");
    return x_star + random_field(mesh.node_count, a.seed + trial, a.amplitude * h);
  };

  if (a.identity == "massdiff" || a.identity == "stiffdiff" || a.identity == "monotone") {
    for (int trial = 0; trial < a.trials; ++trial) {
      const NodalVector x = perturbed(trial);
      const NodalVector w = random_field(mesh.node_count, a.seed + 1000 + trial, 1.0);
      const NodalVector z = random_field(mesh.node_count, a.seed + 2000 + trial, 1.0);
      std::vector<IdentityReport> reports;
      double rel = 0;
      for (int q : a.theta_orders) {
        IdentityReport r;
        if (a.identity == "massdiff") r = mass_difference_identity(assembler, x_star, x, w, z, q);
        else if (a.identity == "stiffdiff") r = stiffness_difference_identity(assembler, x_star, x, w, q);
        else r = monotone_decomposition(assembler, x_star, x, q);
        emit(trial, r);
        rel = r.rel_residual;
        if (a.identity == "monotone")
          rel = r.abs_residual / std::max({std::abs(r.lhs), r.part("normal_part"), kResidualFloor * r.scale});
        reports.push_back(r);
        if (a.identity == "monotone" && r.part("normal_part") < 0) fail("negative normal part");
      }
      if (rel > a.tolerance) fail("trial " + std::to_string(trial) + " residual " + format_scientific(rel));
      if (!residuals_settle(reports)) fail("trial " + std::to_string(trial) + " residual not monotone in theta order");
    }
  } else if (a.identity == "trace") {
    for (int trial = 0; trial < a.trials; ++trial) {
      NodalVector e;
      if (a.field == "identity") e = x_star;
      else if (a.field == "zero") e = NodalVector::Zero(mesh.node_count, 3);
      else if (a.field == "random") e = random_field(mesh.node_count, a.seed + trial, a.amplitude * h);
      else throw PreconditionError("--field must be identity, random or zero for trace");
      IdentityReport r;
      r.name = "trace";
      r.lhs = trace_functional(assembler, x_star, e);
      const double area = assembler.area(x_star);
      r.rhs = a.field == "identity" ? 2 * area : 0.0;
      r.abs_residual = std::abs(r.lhs - r.rhs);
      r.scale = 2 * area;
      r.rel_residual = r.abs_residual / std::max({std::abs(r.lhs), std::abs(r.rhs), kResidualFloor * r.scale});
      r.surface_quadrature_exactness = assembler.quadrature_exactness();
      r.breakdown = {{"ratio_to_two_area", r.lhs / (2 * area)}, {"claimed_zero_residual", std::abs(r.lhs)}};
      emit(trial, r);
      std::cerr << "T/(2*area) = " << format_scientific(r.lhs / (2 * area)) << '\n';
      if (a.field == "identity" && r.rel_residual > a.tolerance)
        fail("T differs from 2*area by " + format_scientific(r.rel_residual));
      if (a.field == "zero" && r.lhs != 0) fail("nonzero trace functional for e = 0");
    }
  } else if (a.identity == "normequiv") {
    NodalVector e = NodalVector::Zero(mesh.node_count, 3);
    if (a.field == "random") {
      e = random_field(mesh.node_count, a.seed, 1.0);
      e *= a.gradient / gradient_linf(assembler, x_star, e);
    } else if (a.field == "scaling") {
      e = a.scale * x_star;
    } else if (a.field != "zero") {
      throw PreconditionError("--field must be random, scaling or zero for normequiv");
    }
    const NormEquivalenceReport rep = norm_equivalence_probe(assembler, x_star, e, a.trials, a.thetas, a.seed);
    IdentityReport r;
    r.name = "normequiv";
    r.lhs = rep.linf_value.max;
    r.rhs = 2.0;
    r.abs_residual = std::max(0.0, r.lhs - r.rhs);
    r.rel_residual = r.abs_residual / r.rhs;
    r.surface_quadrature_exactness = assembler.quadrature_exactness();
    r.breakdown = {{"hypothesis_value", rep.hypothesis_value}, {"linf_value_min", rep.linf_value.min},
                   {"linf_value_max", rep.linf_value.max},     {"linf_gradient_min", rep.linf_gradient.min},
                   {"linf_gradient_max", rep.linf_gradient.max}, {"l2_value_min", rep.l2_value.min},
                   {"l2_value_max", rep.l2_value.max},         {"l2_gradient_min", rep.l2_gradient.min},
                   {"l2_gradient_max", rep.l2_gradient.max}};
    emit(0, r);
    if (rep.linf_value.max > a.linf_bound)
      fail("max L-infinity ratio " + format_scientific(rep.linf_value.max) + " above " +
           format_scientific(a.linf_bound));
  } else {
    const DefectReport rep = defect(assembler, x_star, Sphere{a.radius}, a.t);
    IdentityReport r;
    r.name = "defect";
    r.lhs = rep.norm_M_defect;
    r.rel_residual = rep.solve_residual;
    r.surface_quadrature_exactness = assembler.quadrature_exactness();
    r.breakdown = {{"t", rep.t}, {"solve_residual", rep.solve_residual}};
    emit(0, r);
    if (rep.solve_residual > 1e-10) fail("defect solve residual " + format_scientific(rep.solve_residual));
  }
  return violated ? kInvariant : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving surface finite elements for mean curvature flow of closed surfaces"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  MeshArgs mesh_args;
  auto* mesh = app.add_subcommand("mesh", "write a projected icosphere mesh as JSON");
  mesh->add_option("--level", mesh_args.level, "subdivision level")->check(CLI::Range(0, kMaxIcosphereLevel));
  mesh->add_option("--degree", mesh_args.degree, "Lagrange degree")->check(CLI::Range(1, kMaxDegree));
  mesh->add_option("--radius", mesh_args.radius, "sphere radius")->check(CLI::PositiveNumber);
  mesh->add_option("--out", mesh_args.out, "output file");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "integrate the flow from a sphere or a mesh file");
  run->add_option("--level", run_args.level, "subdivision level")->check(CLI::Range(0, kMaxIcosphereLevel));
  run->add_option("--degree", run_args.degree, "Lagrange degree")->check(CLI::Range(1, kMaxDegree));
  run->add_option("--radius", run_args.radius, "initial radius")->check(CLI::PositiveNumber);
  run->add_option("--mesh", run_args.mesh_file, "mesh JSON instead of an icosphere")->check(CLI::ExistingFile);
  run->add_option("--scheme", run_args.scheme, "rk4 | limplicit | bdf3")
      ->check(CLI::IsMember({"rk4", "limplicit", "bdf3", "semidiscrete_rk4", "linearly_implicit_euler",
                             "semidiscrete_bdf3"}));
  run->add_option("--t-end", run_args.t_end, "final time");
  run->add_option("--tau", run_args.tau, "time step");
  run->add_option("--cg-tol", run_args.cg_tolerance, "relative CG residual")->check(CLI::PositiveNumber);
  run->add_option("--cg-max-iter", run_args.cg_max_iterations, "CG iteration cap")->check(CLI::PositiveNumber);
  run->add_option("--quality-abort", run_args.quality_abort, "minimum element quality");
  run->add_option("--snapshot-stride", run_args.snapshot_stride, "steps between snapshots, 0 for none")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--quadrature", run_args.quadrature, "surface quadrature exactness, -1 for 2k+2");
  run->add_option("--out-dir", run_args.out_dir, "output directory");

  ConvergenceArgs conv_args;
  conv_args.study.threads = thread_cap();
  auto* conv = app.add_subcommand("convergence", "EOC study on the shrinking sphere");
  conv->add_option("--degrees", conv_args.study.degrees, "degrees")->delimiter(',')->check(CLI::Range(1, kMaxDegree));
  conv->add_option("--levels", conv_args.study.levels, "levels")
      ->delimiter(',')
      ->check(CLI::Range(0, kMaxIcosphereLevel));
  conv->add_option("--radius", conv_args.study.initial_radius, "initial radius")->check(CLI::PositiveNumber);
  conv->add_option("--t-end", conv_args.study.t_end, "final time");
  conv->add_option("--scheme", conv_args.scheme, "rk4 | limplicit | bdf3")
      ->check(CLI::IsMember({"rk4", "limplicit", "bdf3", "semidiscrete_rk4", "linearly_implicit_euler",
                             "semidiscrete_bdf3"}));
  conv->add_option("--tau-factor", conv_args.study.tau_factor, "tau = factor * h^2");
  conv->add_option("--min-steps", conv_args.study.min_steps, "tau <= t_end / min_steps");
  conv->add_option("--guard-tol", conv_args.study.guard_tolerance, "relative change allowed under tau halving");
  conv->add_option("--max-halvings", conv_args.study.max_halvings, "tau halvings, 0 disables the guard");
  conv->add_option("--quadrature", conv_args.study.quadrature_exactness, "surface quadrature exactness");
  conv->add_option("--cg-tol", conv_args.study.linear.tolerance, "relative CG residual")->check(CLI::PositiveNumber);
  conv->add_option("--threads", conv_args.study.threads, "concurrent cells (capped by MCF_THREADS)")
      ->check(CLI::PositiveNumber);
  conv->add_option("--out-dir", conv_args.out_dir, "output directory");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "evaluate an identity over random trials");
  verify->add_option("--identity", verify_args.identity, "massdiff | stiffdiff | monotone | trace | normequiv | defect")
      ->required();
  verify->add_option("--degree", verify_args.degree, "Lagrange degree")->check(CLI::Range(1, kMaxDegree));
  verify->add_option("--level", verify_args.level, "subdivision level")->check(CLI::Range(0, kMaxIcosphereLevel));
  verify->add_option("--radius", verify_args.radius, "sphere radius")->check(CLI::PositiveNumber);
  verify->add_option("--trials", verify_args.trials, "random trials");
  verify->add_option("--theta-orders", verify_args.theta_orders, "Gauss points in theta")->delimiter(',');
  verify->add_option("--amplitude", verify_args.amplitude, "max |e| in units of h");
  verify->add_option("--field", verify_args.field, "random | identity | scaling | zero");
  verify->add_option("--scale", verify_args.scale, "s for the scaling field");
  verify->add_option("--gradient", verify_args.gradient, "max |grad e| for normequiv");
  verify->add_option("--thetas", verify_args.thetas, "theta grid for normequiv")->delimiter(',');
  verify->add_option("--t", verify_args.t, "time for the defect");
  verify->add_option("--seed", verify_args.seed, "random seed");
  verify->add_option("--tolerance", verify_args.tolerance, "relative residual bound");
  verify->add_option("--out", verify_args.out, "CSV file, default stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*mesh) return cmd_mesh(mesh_args);
    if (*run) return cmd_run(run_args);
    if (*conv) return cmd_convergence(conv_args);
    return cmd_verify(verify_args);
  } catch (const PreconditionError& e) {
    std::cerr << "mcf: " << e.what() << '\n';
    return kUsage;
  } catch (const CapacityError& e) {
    std::cerr << "mcf: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "mcf: " << e.what() << '\n';
    return kNumerical;
  }
}
