// Convergence study on the shrinking sphere: one flow run per (degree, level)
// cell with τ tied to h and checked by halving, plus the static error
// measures of the same mesh.
#pragma once
#include "esfem/exactflow.hpp"
#include "esfem/solver.hpp"
#include "esfem/verify.hpp"

#include <json.hpp>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace esfem {

struct StudyConfig {
  std::vector<int> degrees{1, 2, 3};
  std::vector<int> levels{1, 2, 3, 4};
  double initial_radius = 1.0;
  double t_end = 0.05;
  Scheme scheme = Scheme::semidiscrete_bdf3;
  double tau_factor = 0.125;  ///< τ = tau_factor·h², see `study_tau`
  int min_steps = 16;         ///< τ ≤ t_end/min_steps
  double guard_tolerance = 0.01;
  int max_halvings = 3;  ///< 0 disables the τ-halving guard
  int quadrature_exactness = -1;
  LinearSolveParams linear;
  int threads = 1;
};

/// Throws PreconditionError for empty or invalid lists, a non-positive radius,
/// t_end outside (0, T_sing) or a non-positive τ factor.
void validate(const StudyConfig& config);

/// Initial step of a cell: min(tau_factor·h², t_end/min_steps), further
/// limited by the RK4 stability bound when the scheme is RK4.
double study_tau(const StudyConfig& config, const SurfaceAssembler& assembler, const NodalVector& x0, double h);

struct StudyCell {
  int degree = 0;
  int level = 0;
  Eigen::Index nodes = 0;
  double h = 0;
  double tau = 0;  ///< step of the reported run
  int steps = 0;
  int halvings = 0;
  double guard_change = std::numeric_limits<double>::quiet_NaN();  ///< relative l2 change τ → τ/2
  bool guard_passed = false;
  FlowmapError error;
  double defect_norm = 0;
  GeometricErrorReport geometry;
  double final_area = 0;
  double exact_area = 0;  ///< 4π R(t_end)²
  double area_error = 0;
  bool area_monotone = true;
  double max_area_increase = 0;  ///< largest area(t_{n+1}) − area(t_n), 0 when monotone
  bool degenerated = false;
  std::string abort_reason;
  double seconds = 0;
};

/// Runs a single cell. Flow errors are measured at t_end.
StudyCell run_study_cell(const StudyConfig& config, int degree, int level);

using StudyProgress = std::function<void(const StudyCell&)>;

/// All cells, ordered by degree then level. Cells run on up to
/// config.threads threads; `progress` is called under a lock.
std::vector<StudyCell> run_study(const StudyConfig& config, const StudyProgress& progress = {});

/// Rows of one degree, in level order.
std::vector<StudyCell> cells_of_degree(const std::vector<StudyCell>& cells, int degree);

/// EOC of a cell quantity over the cells of one degree.
EOCTable study_eoc(const std::vector<StudyCell>& cells, const std::function<double(const StudyCell&)>& value);

/// x₁², the probe function for the interpolation error.
double interpolation_probe(const Vec3& p);

nlohmann::json to_json(const StudyCell& cell);
nlohmann::json to_json(const StudyConfig& config);

}  // namespace esfem
