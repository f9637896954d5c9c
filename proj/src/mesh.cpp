#include "esfem/mesh.hpp"

#include "esfem/reference_element.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace esfem {
namespace {

using Index = Eigen::Index;
using Face = std::array<Index, 3>;
using Lattice = std::array<int, 3>;

struct CornerMesh {
  std::vector<Face> faces;
  Index vertex_count = 0;
};

std::pair<Index, Index> edge_key(Index a, Index b) { return {std::min(a, b), std::max(a, b)}; }

Eigen::Matrix<double, Eigen::Dynamic, 3> layout_matrix(int k) {
  const auto idx = lattice_indices(k);
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(idx.size(), 3);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int c = 0; c < 3; ++c) out(i, c) = double(idx[i][c]) / k;
  return out;
}

/// Numbers vertices first, then k−1 nodes per undirected edge (counted from
/// the lower vertex index), then interior nodes per face. `position(f, a)`
/// places the node with lattice index `a` of face `f`; it is called once per
/// global node.
template <typename PositionFn>
MeshWithPositions build_lagrange(const CornerMesh& cm, int k, int level, PositionFn&& position) {
  std::map<std::pair<Index, Index>, Index> edge_ids;
  for (const auto& f : cm.faces)
    for (int s = 0; s < 3; ++s) edge_ids.try_emplace(edge_key(f[s], f[(s + 1) % 3]), Index(edge_ids.size()));

  const Index V = cm.vertex_count;
  const Index E = static_cast<Index>(edge_ids.size());
  const Index F = static_cast<Index>(cm.faces.size());
  const int n_loc = nodes_per_element(k);
  const int n_int = (k - 1) * (k - 2) / 2;
  const Index edge_base = V;
  const Index face_base = V + E * (k - 1);

  MeshWithPositions out;
  out.mesh.degree = k;
  out.mesh.level = level;
  out.mesh.node_count = face_base + F * n_int;
  out.mesh.elements.resize(F, n_loc);
  out.mesh.reference_layout = layout_matrix(k);
  out.positions = NodalVector::Zero(out.mesh.node_count, 3);
  std::vector<char> placed(out.mesh.node_count, 0);

  const auto lattice = lattice_indices(k);
  for (Index fi = 0; fi < F; ++fi) {
    const Face& f = cm.faces[fi];
    for (int loc = 0; loc < n_loc; ++loc) {
      const Lattice& a = lattice[loc];
      Index global;
      if (loc < 3) {
        global = f[loc];
      } else if (loc < 3 + 3 * (k - 1)) {
        const int side = (loc - 3) / (k - 1);
        const int t = (loc - 3) % (k - 1) + 1;  // steps from corner `side`
        const Index from = f[side], to = f[(side + 1) % 3];
        const Index eid = edge_ids.at(edge_key(from, to));
        const int steps_from_low = from < to ? t : k - t;
        global = edge_base + eid * (k - 1) + (steps_from_low - 1);
      } else {
        global = face_base + fi * n_int + (loc - 3 - 3 * (k - 1));
      }
      out.mesh.elements(fi, loc) = global;
      if (!placed[global]) {
        out.positions.row(global) = position(fi, a).transpose();
        placed[global] = 1;
      }
    }
  }
  return out;
}

CornerMesh icosahedron(std::vector<Vec3>& verts) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  verts = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
           {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  CornerMesh cm;
  cm.vertex_count = 12;
  cm.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
              {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
              {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& f : cm.faces) {
    const Vec3 n = (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]);
    if (n.dot(verts[f[0]] + verts[f[1]] + verts[f[2]]) < 0) std::swap(f[1], f[2]);
  }
  return cm;
}

/// Child corners of the 4-way split in the parent's doubled lattice
/// (components sum to 2): P0, P1, P2, M01, M12, M20.
constexpr std::array<Lattice, 6> kSplitPoints = {
    Lattice{2, 0, 0}, Lattice{0, 2, 0}, Lattice{0, 0, 2}, Lattice{1, 1, 0}, Lattice{0, 1, 1}, Lattice{1, 0, 1}};
constexpr std::array<std::array<int, 3>, 4> kChildren = {
    std::array<int, 3>{0, 3, 5}, std::array<int, 3>{3, 1, 4}, std::array<int, 3>{5, 4, 2},
    std::array<int, 3>{3, 4, 5}};

struct SplitResult {
  CornerMesh mesh;
  std::vector<Index> parent;  // per child face
  std::vector<int> child;     // which of kChildren
};

SplitResult split(const CornerMesh& cm) {
  std::map<std::pair<Index, Index>, Index> mid;
  SplitResult out;
  out.mesh.vertex_count = cm.vertex_count;
  auto midpoint = [&](Index a, Index b) {
    auto [it, inserted] = mid.try_emplace(edge_key(a, b), out.mesh.vertex_count);
    if (inserted) ++out.mesh.vertex_count;
    return it->second;
  };
  for (Index fi = 0; fi < Index(cm.faces.size()); ++fi) {
    const Face& f = cm.faces[fi];
    const std::array<Index, 6> pts = {f[0], f[1], f[2], midpoint(f[0], f[1]), midpoint(f[1], f[2]),
                                      midpoint(f[2], f[0])};
    for (int c = 0; c < 4; ++c) {
      out.mesh.faces.push_back({pts[kChildren[c][0]], pts[kChildren[c][1]], pts[kChildren[c][2]]});
      out.parent.push_back(fi);
      out.child.push_back(c);
    }
  }
  return out;
}

Vec3 project(const Vec3& p, double radius) { return radius * p / p.norm(); }

void check_radius(double radius) {
  if (!(radius > 0) || !std::isfinite(radius)) throw PreconditionError("radius must be positive and finite");
}

}  // namespace

MeshWithPositions build_icosphere(int level, int degree, double radius) {
  check_radius(radius);
  if (level < 0) throw PreconditionError("icosphere level must be >= 0");
  if (level > kMaxIcosphereLevel)
    throw CapacityError("icosphere level " + std::to_string(level) + " exceeds cap " +
                        std::to_string(kMaxIcosphereLevel));
  if (degree < 1) throw PreconditionError("element degree must be >= 1");
  if (degree > kMaxDegree)
    throw CapacityError("element degree " + std::to_string(degree) + " exceeds cap " + std::to_string(kMaxDegree));

  std::vector<Vec3> verts;
  CornerMesh cm = icosahedron(verts);
  for (auto& v : verts) v = project(v, radius);
  for (int l = 0; l < level; ++l) {
    SplitResult s = split(cm);
    verts.resize(s.mesh.vertex_count);
    for (Index fi = 0; fi < Index(s.mesh.faces.size()); ++fi) {
      const Face& f = s.mesh.faces[fi];
      for (int c = 0; c < 3; ++c)
        if (f[c] >= cm.vertex_count) {
          const Lattice& a = kSplitPoints[kChildren[s.child[fi]][c]];
          const Face& pf = cm.faces[s.parent[fi]];
          Vec3 p = Vec3::Zero();
          for (int j = 0; j < 3; ++j) p += 0.5 * a[j] * verts[pf[j]];
          verts[f[c]] = project(p, radius);
        }
    }
    cm = std::move(s.mesh);
  }

  return build_lagrange(cm, degree, level, [&](Index fi, const Lattice& a) -> Vec3 {
    const Face& f = cm.faces[fi];
    // Corners are placed exactly; other lattice points are projected.
    for (int c = 0; c < 3; ++c)
      if (a[c] == degree) return verts[f[c]];
    Vec3 p = Vec3::Zero();
    for (int c = 0; c < 3; ++c) p += (double(a[c]) / degree) * verts[f[c]];
    return project(p, radius);
  });
}

MeshWithPositions refine(const SurfaceMesh& mesh, const NodalVector& positions, const double* project_radius) {
  if (positions.rows() != mesh.node_count) throw PreconditionError("refine: positions do not match mesh");
  if (project_radius) check_radius(*project_radius);
  const int k = mesh.degree;
  const Index F = mesh.element_count();

  for (Index e = 0; e < F; ++e) {
    const Vec3 a = positions.row(mesh.elements(e, 0)), b = positions.row(mesh.elements(e, 1)),
               c = positions.row(mesh.elements(e, 2));
    const double diam = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    if (!((b - a).cross(c - a).norm() > 1e-14 * diam * diam))
      throw GeometryError("refine: degenerate parent element " + std::to_string(e));
  }

  CornerMesh cm;
  cm.faces.resize(F);
  Index vmax = 0;
  for (Index e = 0; e < F; ++e) {
    cm.faces[e] = {mesh.elements(e, 0), mesh.elements(e, 1), mesh.elements(e, 2)};
    vmax = std::max({vmax, cm.faces[e][0], cm.faces[e][1], cm.faces[e][2]});
  }
  // Compact corner ids to [0, V) for the vertex-level split.
  std::vector<Index> remap(vmax + 1, -1);
  Index V = 0;
  for (auto& f : cm.faces)
    for (auto& v : f) {
      if (remap[v] < 0) remap[v] = V++;
      v = remap[v];
    }
  cm.vertex_count = V;

  const SplitResult s = split(cm);
  const ReferenceElement<double> ref(k);
  std::map<Lattice, int> local_of;
  for (int i = 0; i < ref.size(); ++i) local_of[ref.lattice()[i]] = i;

  auto result = build_lagrange(s.mesh, k, mesh.level + 1, [&](Index fi, const Lattice& b) -> Vec3 {
    const Index pe = s.parent[fi];
    const auto& corners = kChildren[s.child[fi]];
    Lattice I{0, 0, 0};  // index in the parent's 2k-lattice
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < 3; ++j) I[j] += b[c] * kSplitPoints[corners[c]][j];
    if (I[0] % 2 == 0 && I[1] % 2 == 0 && I[2] % 2 == 0) {
      const int loc = local_of.at(Lattice{I[0] / 2, I[1] / 2, I[2] / 2});
      return positions.row(mesh.elements(pe, loc)).transpose();
    }
    const Barycentric lambda(double(I[0]) / (2 * k), double(I[1]) / (2 * k), double(I[2]) / (2 * k));
    const auto phi = ref.values(lambda);
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < ref.size(); ++i) p += phi[i] * positions.row(mesh.elements(pe, i)).transpose();
    return project_radius ? project(p, *project_radius) : p;
  });
  return result;
}

double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double ab = (a - b).norm(), bc = (b - c).norm(), ca = (c - a).norm();
  const double diam = std::max({ab, bc, ca});
  if (!(diam > 0)) return 0.0;
  const double area = 0.5 * (b - a).cross(c - a).norm();
  const double inradius = 2.0 * area / (ab + bc + ca);
  return inradius / diam;
}

MeshSize mesh_size(const SurfaceMesh& mesh, const NodalVector& x, double threshold) {
  MeshSize s;
  s.h_max = 0;
  s.h_min = std::numeric_limits<double>::infinity();
  s.quality = std::numeric_limits<double>::infinity();
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Vec3 a = x.row(mesh.elements(e, 0)), b = x.row(mesh.elements(e, 1)), c = x.row(mesh.elements(e, 2));
    const double diam = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    s.h_max = std::max(s.h_max, diam);
    s.h_min = std::min(s.h_min, diam);
    s.quality = std::min(s.quality, triangle_quality(a, b, c));
  }
  if (mesh.element_count() == 0) s.h_min = s.quality = 0;
  s.degenerate = !(s.quality >= threshold);
  return s;
}

MeshCheck check_mesh(const SurfaceMesh& mesh) {
  MeshCheck r;
  const int k = mesh.degree;
  std::vector<char> used(mesh.node_count, 0);
  for (Index e = 0; e < mesh.element_count(); ++e)
    for (Index i = 0; i < mesh.elements.cols(); ++i) {
      const Index n = mesh.elements(e, i);
      if (n < 0 || n >= mesh.node_count) {
        r.indices_in_range = false;
        r.problems.push_back("element " + std::to_string(e) + " references node " + std::to_string(n));
      } else {
        used[n] = 1;
      }
    }
  if (!r.indices_in_range) return r;
  if (std::find(used.begin(), used.end(), 0) != used.end()) {
    r.all_nodes_referenced = false;
    r.problems.push_back("unreferenced nodes present");
  }

  struct Use {
    Index element;
    Index from, to;
    std::vector<Index> sequence;  // from → to, including both corners
  };
  std::map<std::pair<Index, Index>, std::vector<Use>> edges;
  std::vector<char> is_vertex(mesh.node_count, 0);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    for (int side = 0; side < 3; ++side) {
      Use u{e, mesh.elements(e, side), mesh.elements(e, (side + 1) % 3), {}};
      u.sequence.push_back(u.from);
      for (int t = 1; t < k; ++t) u.sequence.push_back(mesh.elements(e, 3 + side * (k - 1) + (t - 1)));
      u.sequence.push_back(u.to);
      edges[edge_key(u.from, u.to)].push_back(std::move(u));
    }
    for (int c = 0; c < 3; ++c) is_vertex[mesh.elements(e, c)] = 1;
  }
  for (const auto& [key, uses] : edges) {
    if (uses.size() != 2) {
      r.closed = false;
      r.problems.push_back("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ") has " +
                           std::to_string(uses.size()) + " elements");
      continue;
    }
    if (!(uses[0].from == uses[1].to && uses[0].to == uses[1].from)) {
      r.consistently_oriented = false;
      r.problems.push_back("inconsistent orientation across elements " + std::to_string(uses[0].element) + " and " +
                           std::to_string(uses[1].element));
    }
    std::vector<Index> rev(uses[1].sequence.rbegin(), uses[1].sequence.rend());
    if (rev != uses[0].sequence && uses[1].sequence != uses[0].sequence) {
      r.conforming = false;
      r.problems.push_back("non-conforming edge between elements " + std::to_string(uses[0].element) + " and " +
                           std::to_string(uses[1].element));
    } else if (rev != uses[0].sequence) {
      r.consistently_oriented = false;
    }
  }
  const long V = std::count(is_vertex.begin(), is_vertex.end(), 1);
  r.euler_characteristic = V - long(edges.size()) + long(mesh.element_count());
  if (r.euler_characteristic != 2)
    r.problems.push_back("euler characteristic " + std::to_string(r.euler_characteristic));
  return r;
}

double signed_volume(const SurfaceMesh& mesh, const NodalVector& x) {
  double v = 0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Vec3 a = x.row(mesh.elements(e, 0)), b = x.row(mesh.elements(e, 1)), c = x.row(mesh.elements(e, 2));
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

}  // namespace esfem
