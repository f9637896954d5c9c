#include "esfem/io.hpp"
#include "esfem/mesh.hpp"
#include "esfem/reference_element.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace esfem;

namespace {

// Every row of `subset` occurs in `set` up to `tol`.
bool contains_all(const NodalVector& set, const NodalVector& subset, double tol) {
  for (Eigen::Index i = 0; i < subset.rows(); ++i)
    if (((set.rowwise() - subset.row(i)).rowwise().norm().array() > tol).all()) return false;
  return true;
}

}  // namespace

TEST_CASE("icosahedron") {
  auto [mesh, x] = build_icosphere(0, 1, 1.0);
  CHECK(mesh.node_count == 12);
  CHECK(mesh.element_count() == 20);
  const double edge = 4 / std::sqrt(10 + 2 * std::sqrt(5.0));
  const auto size = mesh_size(mesh, x);
  CHECK(size.h_max == doctest::Approx(edge).epsilon(1e-14));
  CHECK(size.h_min == doctest::Approx(edge).epsilon(1e-14));
  CHECK(size.quality == doctest::Approx(triangle_quality(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0))));
  CHECK((x.rowwise().norm().array() - 1).abs().maxCoeff() < 1e-15);
  CHECK(signed_volume(mesh, x) > 0);
  // area 5√3·a² with a² = 16/(10+2√5)
  double area = 0;
  for (Eigen::Index e = 0; e < mesh.element_count(); ++e) {
    const Vec3 a = x.row(mesh.elements(e, 0)), b = x.row(mesh.elements(e, 1)), c = x.row(mesh.elements(e, 2));
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  CHECK(area == doctest::Approx(5 * std::sqrt(3.0) * 16 / (10 + 2 * std::sqrt(5.0))).epsilon(1e-14));
}

TEST_CASE("icosphere node counts and checks") {
  for (int k = 1; k <= 4; ++k)
    for (int level = 0; level <= 3; ++level) {
      CAPTURE(k);
      CAPTURE(level);
      auto [mesh, x] = build_icosphere(level, k, 2.0);
      const Eigen::Index faces = 20 * (Eigen::Index(1) << (2 * level));
      CHECK(mesh.element_count() == faces);
      CHECK(mesh.node_count == faces * k * k / 2 + 2);
      CHECK(mesh.nodes_per_element() == nodes_per_element(k));
      const auto chk = check_mesh(mesh);
      CHECK(chk.ok());
      CHECK(chk.euler_characteristic == 2);
      CHECK((x.rowwise().norm().array() - 2).abs().maxCoeff() < 1e-14);
      CHECK(signed_volume(mesh, x) > 0);
    }
  CHECK(build_icosphere(2, 2, 1.0).mesh.node_count == 642);
}

TEST_CASE("icosphere argument checks") {
  CHECK_THROWS_AS(build_icosphere(-1, 1, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_icosphere(1, 0, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_icosphere(1, 1, 0.0), PreconditionError);
  CHECK_THROWS_AS(build_icosphere(kMaxIcosphereLevel + 1, 1, 1.0), CapacityError);
  CHECK_THROWS_AS(build_icosphere(1, kMaxDegree + 1, 1.0), CapacityError);
}

TEST_CASE("mesh size shrinks by about half per level") {
  double prev = 0;
  for (int level = 0; level <= 4; ++level) {
    auto [mesh, x] = build_icosphere(level, 1, 1.0);
    const auto size = mesh_size(mesh, x);
    CHECK_FALSE(size.degenerate);
    CHECK(size.quality > 0.2);
    if (level > 0) CHECK(prev / size.h_max == doctest::Approx(2.0).epsilon(0.1));
    prev = size.h_max;
  }
}

TEST_CASE("refinement keeps old nodes and curved geometry") {
  for (int k = 1; k <= 3; ++k) {
    auto [coarse, xc] = build_icosphere(1, k, 1.0);
    auto [fine, xf] = refine(coarse, xc);
    CHECK(check_mesh(fine).ok());
    CHECK(fine.level == 2);
    CHECK(fine.element_count() == 4 * coarse.element_count());
    CHECK(contains_all(xf, xc, 0.0));
    const double r = 1.0;
    auto [proj, xp] = refine(coarse, xc, &r);
    CHECK((xp.rowwise().norm().array() - 1).abs().maxCoeff() < 1e-14);
    if (k == 1) CHECK(contains_all(xp, build_icosphere(2, 1, 1.0).positions, 1e-14));
  }
}

TEST_CASE("check_mesh flags broken connectivity") {
  auto [mesh, x] = build_icosphere(1, 1, 1.0);
  SUBCASE("flipped element") {
    std::swap(mesh.elements(0, 1), mesh.elements(0, 2));
    const auto chk = check_mesh(mesh);
    CHECK_FALSE(chk.consistently_oriented);
    CHECK_FALSE(chk.ok());
  }
  SUBCASE("out of range index") {
    mesh.elements(3, 0) = mesh.node_count + 5;
    CHECK_FALSE(check_mesh(mesh).indices_in_range);
  }
  SUBCASE("missing element") {
    mesh.elements.conservativeResize(mesh.element_count() - 1, Eigen::NoChange);
    const auto chk = check_mesh(mesh);
    CHECK_FALSE(chk.closed);
    CHECK_FALSE(chk.ok());
  }
}

TEST_CASE("degenerate positions are reported") {
  auto [mesh, x] = build_icosphere(1, 1, 1.0);
  x.row(mesh.elements(0, 1)) = x.row(mesh.elements(0, 0));
  const auto size = mesh_size(mesh, x);
  CHECK(size.degenerate);
  CHECK(size.quality == 0.0);
  CHECK(triangle_quality(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)) == 0.0);
}

TEST_CASE("mesh json round trip") {
  auto [mesh, x] = build_icosphere(1, 2, 1.5);
  const auto back = mesh_from_json(mesh_to_json(mesh, x));
  CHECK(back.mesh.degree == 2);
  CHECK(back.mesh.level == 1);
  CHECK(back.mesh.node_count == mesh.node_count);
  CHECK((back.mesh.elements - mesh.elements).cwiseAbs().maxCoeff() == 0);
  CHECK((back.positions - x).norm() == 0.0);
  const auto path = std::filesystem::temp_directory_path() / "esfem_mesh_roundtrip.json";
  write_mesh_json(path, mesh, x);
  CHECK((read_mesh_json(path).positions - x).norm() == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS(mesh_from_json(nlohmann::json{{"degree", 1}}));
}

TEST_CASE("csv helpers") {
  CHECK(format_scientific(0.1) == "1.0000000000000001e-01");
  CHECK(format_scientific(-2.0) == "-2.0000000000000000e+00");
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("abc") == config_hash("abc"));
  CHECK(config_hash("abc") != config_hash("abd"));
  const auto pre = csv_preamble("{}", {"a", "b"});
  CHECK(pre == "# mcf " + std::string(kToolVersion) + " config=" + config_hash("{}") + "\na,b\n");
}
