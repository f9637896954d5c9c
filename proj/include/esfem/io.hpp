// File formats: mesh/positions JSON, CSV formatting helpers, provenance.
#pragma once

#include "esfem/mesh.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace esfem {

inline constexpr const char* kToolVersion = "0.3.0";

/// {degree, level, nodes: [[x,y,z]...], elements: [[i0..im]...]}, 0-based.
nlohmann::json mesh_to_json(const SurfaceMesh& mesh, const NodalVector& positions);
MeshWithPositions mesh_from_json(const nlohmann::json& j);

void write_mesh_json(const std::filesystem::path& path, const SurfaceMesh& mesh, const NodalVector& positions);
MeshWithPositions read_mesh_json(const std::filesystem::path& path);

/// Scientific notation with 17 significant digits, '.' decimal point.
std::string format_scientific(double v);

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string config_hash(const std::string& text);

/// "# mcf <version> config=<hash>" followed by the comma-joined header row;
/// both lines LF-terminated.
std::string csv_preamble(const std::string& config_text, const std::vector<std::string>& columns);

}  // namespace esfem
