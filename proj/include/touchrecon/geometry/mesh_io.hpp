#pragma once

#include "touchrecon/geometry/mesh.hpp"

#include <string>
#include <vector>

namespace touchrecon {

/// Loads OBJ or PLY (ASCII or binary little-endian) by extension. Degenerate
/// faces are dropped with a warning and vertex normals are recomputed.
TriangleMesh load_mesh(const std::string& path);
void save_mesh(const std::string& path, const TriangleMesh& mesh);

TriangleMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

TriangleMesh read_ply(const std::string& path);
void write_ply(const std::string& path, const TriangleMesh& mesh);  // binary LE

/// Vertex-only binary PLY.
void write_point_cloud(const std::string& path, const std::vector<Vec3>& points);
std::vector<Vec3> read_point_cloud(const std::string& path);

}  // namespace touchrecon
