#include "esfem/study.hpp"

#include <doctest.h>

#include <cmath>

using namespace esfem;

TEST_CASE("study config validation") {
  StudyConfig c;
  CHECK_NOTHROW(validate(c));
  auto rejects = [](StudyConfig bad) { CHECK_THROWS_AS(validate(bad), PreconditionError); };
  StudyConfig bad = c;
  bad.degrees.clear();
  rejects(bad);
  bad = c;
  bad.levels = {-1};
  rejects(bad);
  bad = c;
  bad.degrees = {kMaxDegree + 1};
  rejects(bad);
  bad = c;
  bad.t_end = 0.25;
  rejects(bad);
  bad = c;
  bad.tau_factor = 0;
  rejects(bad);
  bad = c;
  bad.min_steps = 2;
  rejects(bad);
}

TEST_CASE("tau rule") {
  StudyConfig c;
  auto [mesh, x] = build_icosphere(2, 1, 1.0);
  const SurfaceAssembler as(mesh);
  CHECK(study_tau(c, as, x, 0.5) == doctest::Approx(c.t_end / c.min_steps));
  CHECK(study_tau(c, as, x, 0.05) == doctest::Approx(0.125 * 0.05 * 0.05));
  c.scheme = Scheme::semidiscrete_rk4;
  CHECK(study_tau(c, as, x, 0.05) == doctest::Approx(std::min(0.125 * 0.05 * 0.05, rk4_stable_step(as, x))));
  CHECK(study_tau(c, as, x, 0.5) <= rk4_stable_step(as, x));
}

TEST_CASE("small study") {
  StudyConfig c;
  c.degrees = {1, 2};
  c.levels = {1, 2};
  c.threads = 2;
  int seen = 0;
  const auto cells = run_study(c, [&](const StudyCell&) { ++seen; });
  REQUIRE(cells.size() == 4);
  CHECK(seen == 4);
  CHECK(cells[0].degree == 1);
  CHECK(cells[0].level == 1);
  CHECK(cells[3].degree == 2);
  CHECK(cells[3].level == 2);
  for (const auto& cell : cells) {
    CHECK_FALSE(cell.degenerated);
    CHECK(cell.guard_passed);
    CHECK(cell.guard_change < c.guard_tolerance);
    CHECK(cell.halvings >= 1);
    CHECK(cell.area_monotone);
    CHECK(cell.final_area < 4 * M_PI);
    CHECK(cell.steps * cell.tau == doctest::Approx(c.t_end));
    CHECK(cell.error.l2_error > 0);
    CHECK(cell.defect_norm > 0);
  }
  const auto k2 = cells_of_degree(cells, 2);
  REQUIRE(k2.size() == 2);
  CHECK(k2[1].error.l2_error < k2[0].error.l2_error);
  const auto t = study_eoc(k2, [](const StudyCell& s) { return s.error.l2_error; });
  CHECK(t.orders.size() == 1);
  CHECK(t.orders[0] > 1);
  const auto j = to_json(cells[0]);
  CHECK(j["degree"] == 1);
  CHECK(j.contains("guard_change"));
  CHECK(to_json(c)["scheme"] == "bdf3");
}

TEST_CASE("guard can be disabled") {
  StudyConfig c;
  c.degrees = {1};
  c.levels = {1};
  c.max_halvings = 0;
  const auto cell = run_study_cell(c, 1, 1);
  CHECK(cell.halvings == 0);
  CHECK(std::isnan(cell.guard_change));
  CHECK_FALSE(cell.guard_passed);
}
