#pragma once

#include "touchrecon/common/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace touchrecon {

using Face = std::array<std::uint32_t, 3>;

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
};

/// Indexed triangle mesh. `normals` holds unit per-vertex normals (area
/// weighted averages of incident face normals) once compute_normals() ran.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;

  bool empty() const { return faces.empty(); }

  Vec3 face_cross(std::size_t f) const;  // (v1 - v0) x (v2 - v0)
  Vec3 face_normal(std::size_t f) const { return face_cross(f).normalized(); }
  double face_area(std::size_t f) const { return 0.5 * face_cross(f).norm(); }

  void compute_normals();
  void validate() const;  // throws InputError on out-of-range indices
};

/// Drops faces with area below `min_area` or repeated indices; returns the
/// number removed.
std::size_t remove_degenerate_faces(TriangleMesh& mesh, double min_area = 1e-14);

/// x' = (x - center) * scale.
struct Normalization {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
};

/// Centers the bounding box at the origin and scales the longest axis to
/// [-half_extent, half_extent].
Normalization normalize_mesh(TriangleMesh& mesh, double half_extent = 0.9);
void apply_normalization(TriangleMesh& mesh, const Normalization& n);
void transform_mesh(TriangleMesh& mesh, double scale, const Vec3& translation);

Aabb bounds(const TriangleMesh& mesh);
Aabb bounds(std::span<const Vec3> points);
double surface_area(const TriangleMesh& mesh);

struct TopologyReport {
  std::size_t vertex_count = 0;  // referenced vertices only
  std::size_t edge_count = 0;
  std::size_t face_count = 0;
  std::size_t boundary_edges = 0;     // used by one face
  std::size_t nonmanifold_edges = 0;  // used by three or more faces
  std::size_t inconsistent_edges = 0; // directed edge used twice
  long euler_characteristic = 0;
  bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0 && face_count > 0; }
  bool oriented() const { return inconsistent_edges == 0; }
};

TopologyReport analyze_topology(const TriangleMesh& mesh);

/// Unique undirected edges (i < j) sorted lexicographically.
std::vector<std::array<std::uint32_t, 2>> unique_edges(const TriangleMesh& mesh);

}  // namespace touchrecon
