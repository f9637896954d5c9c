// Degree-k curved triangulations of closed surfaces: icosphere generation,
// uniform refinement, structural checks and size/quality statistics.
#pragma once

#include "esfem/types.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace esfem {

inline constexpr int kMaxIcosphereLevel = 7;

/// Connectivity of a degree-k triangulation. Each row of `elements` lists the
/// element's global node indices in `lattice_indices(degree)` order; the
/// first three are the corner vertices, counter-clockwise seen from outside.
struct SurfaceMesh {
  int degree = 1;
  int level = 0;
  Eigen::Index node_count = 0;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> elements;
  /// Barycentric coordinates of the lattice nodes, one row per local node.
  Eigen::Matrix<double, Eigen::Dynamic, 3> reference_layout;

  Eigen::Index element_count() const { return elements.rows(); }
  int nodes_per_element() const { return static_cast<int>(elements.cols()); }

  /// Node positions of element `e` as a 3 × n matrix.
  Eigen::Matrix<double, 3, Eigen::Dynamic> element_nodes(const NodalVector& x, Eigen::Index e) const {
    Eigen::Matrix<double, 3, Eigen::Dynamic> out(3, elements.cols());
    for (Eigen::Index i = 0; i < elements.cols(); ++i) out.col(i) = x.row(elements(e, i)).transpose();
    return out;
  }
};

struct MeshWithPositions {
  SurfaceMesh mesh;
  NodalVector positions;
};

/// Projected icosphere: `level` midpoint subdivisions of the icosahedron,
/// then degree-k Lagrange nodes placed on the flat corner triangles and
/// radially projected; every node lies on the sphere of `radius`.
MeshWithPositions build_icosphere(int level, int degree, double radius);

/// Splits every element into four. New nodes are evaluated through the
/// parent element's degree-k map, then radially projected onto the sphere of
/// `project_radius` if one is given. Old nodes keep their coordinates.
MeshWithPositions refine(const SurfaceMesh& mesh, const NodalVector& positions,
                         const double* project_radius = nullptr);

struct MeshSize {
  double h_max = 0;
  double h_min = 0;
  double quality = 0;  ///< min over elements of inradius / diameter of the corner triangle
  bool degenerate = false;
};

inline constexpr double kDegeneracyQuality = 1e-3;

MeshSize mesh_size(const SurfaceMesh& mesh, const NodalVector& positions,
                   double degeneracy_threshold = kDegeneracyQuality);

/// inradius / diameter of a single triangle; 0 for collinear corners.
double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c);

struct MeshCheck {
  bool indices_in_range = true;
  bool all_nodes_referenced = true;
  bool conforming = true;        ///< shared edges carry the same node sequence, reversed
  bool closed = true;            ///< every edge has exactly two elements
  bool consistently_oriented = true;
  long euler_characteristic = 0;  ///< V − E + F of the vertex-level complex
  std::vector<std::string> problems;

  bool ok() const {
    return indices_in_range && all_nodes_referenced && conforming && closed &&
           consistently_oriented && euler_characteristic == 2;
  }
};

MeshCheck check_mesh(const SurfaceMesh& mesh);

/// Signed enclosed volume of the corner-triangle polyhedron; positive when
/// elements are oriented outward.
double signed_volume(const SurfaceMesh& mesh, const NodalVector& positions);

}  // namespace esfem
