#include "esfem/io.hpp"

#include "esfem/reference_element.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace esfem {

nlohmann::json mesh_to_json(const SurfaceMesh& mesh, const NodalVector& x) {
  if (x.rows() != mesh.node_count) throw PreconditionError("mesh_to_json: positions do not match mesh");
  nlohmann::json j;
  j["degree"] = mesh.degree;
  j["level"] = mesh.level;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) nodes.push_back({x(i, 0), x(i, 1), x(i, 2)});
  auto& elems = j["elements"] = nlohmann::json::array();
  for (Eigen::Index e = 0; e < mesh.element_count(); ++e) {
    auto row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < mesh.elements.cols(); ++i) row.push_back(mesh.elements(e, i));
    elems.push_back(std::move(row));
  }
  return j;
}

MeshWithPositions mesh_from_json(const nlohmann::json& j) {
  MeshWithPositions out;
  try {
    out.mesh.degree = j.at("degree").get<int>();
    out.mesh.level = j.value("level", 0);
    const auto& nodes = j.at("nodes");
    const auto& elems = j.at("elements");
    const int width = nodes_per_element(out.mesh.degree);
    out.positions.resize(nodes.size(), 3);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].size() != 3) throw PreconditionError("mesh json: node " + std::to_string(i) + " is not a 3-vector");
      for (int c = 0; c < 3; ++c) out.positions(i, c) = nodes[i][c].get<double>();
    }
    out.mesh.node_count = static_cast<Eigen::Index>(nodes.size());
    out.mesh.elements.resize(elems.size(), width);
    for (std::size_t e = 0; e < elems.size(); ++e) {
      if (static_cast<int>(elems[e].size()) != width)
        throw PreconditionError("mesh json: element " + std::to_string(e) + " has wrong node count");
      for (int i = 0; i < width; ++i) out.mesh.elements(e, i) = elems[e][i].get<Eigen::Index>();
    }
  } catch (const nlohmann::json::exception& err) {
    throw PreconditionError(std::string("mesh json: ") + err.what());
  }
  const auto idx = lattice_indices(out.mesh.degree);
  out.mesh.reference_layout.resize(idx.size(), 3);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int c = 0; c < 3; ++c) out.mesh.reference_layout(i, c) = double(idx[i][c]) / out.mesh.degree;
  return out;
}

void write_mesh_json(const std::filesystem::path& path, const SurfaceMesh& mesh, const NodalVector& positions) {
  std::ofstream os(path);
  if (!os) throw PreconditionError("cannot open " + path.string() + " for writing");
  os << mesh_to_json(mesh, positions).dump() << '\n';
}

MeshWithPositions read_mesh_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw PreconditionError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& err) {
    throw PreconditionError(path.string() + ": " + err.what());
  }
  return mesh_from_json(j);
}

std::string format_scientific(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_preamble(const std::string& config_text, const std::vector<std::string>& columns) {
  std::ostringstream os;
  os << "# mcf " << kToolVersion << " config=" << config_hash(config_text) << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  return os.str();
}

}  // namespace esfem
