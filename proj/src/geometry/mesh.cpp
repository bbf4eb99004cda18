#include "touchrecon/geometry/mesh.hpp"

#include "touchrecon/common/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <unordered_map>

namespace touchrecon {

Vec3 TriangleMesh::face_cross(std::size_t f) const {
  const auto& t = faces[f];
  const Vec3& a = vertices[t[0]];
  return (vertices[t[1]] - a).cross(vertices[t[2]] - a);
}

void TriangleMesh::compute_normals() {
  std::vector<Vec3> acc(vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3 c = face_cross(f);
    for (auto v : faces[f]) acc[v] += c;
  }
  normals.resize(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double n = acc[i].norm();
    normals[i] = n > 0.0 ? Vec3(acc[i] / n) : Vec3::UnitZ();
  }
}

void TriangleMesh::validate() const {
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (auto v : faces[f])
      if (v >= vertices.size())
        throw InputError(fmt::format("face {} references vertex {} of {}", f, v, vertices.size()));
  for (const auto& v : vertices)
    if (!v.allFinite()) throw InputError("mesh has non-finite vertex coordinates");
}

std::size_t remove_degenerate_faces(TriangleMesh& mesh, double min_area) {
  const std::size_t before = mesh.faces.size();
  std::vector<Face> kept;
  kept.reserve(before);
  for (std::size_t f = 0; f < before; ++f) {
    const auto& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (!(mesh.face_area(f) > min_area)) continue;
    kept.push_back(t);
  }
  mesh.faces = std::move(kept);
  const std::size_t removed = before - mesh.faces.size();
  if (removed > 0) {
    log().warn("dropped {} degenerate face(s)", removed);
    if (!mesh.normals.empty()) mesh.compute_normals();
  }
  return removed;
}

Aabb bounds(std::span<const Vec3> points) {
  Aabb b;
  for (const auto& p : points) b.extend(p);
  return b;
}

Aabb bounds(const TriangleMesh& mesh) {
  Aabb b;
  for (const auto& f : mesh.faces)
    for (auto v : f) b.extend(mesh.vertices[v]);
  if (!b.valid()) b = bounds(mesh.vertices);
  return b;
}

double surface_area(const TriangleMesh& mesh) {
  double a = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) a += mesh.face_area(f);
  return a;
}

void apply_normalization(TriangleMesh& mesh, const Normalization& n) {
  for (auto& v : mesh.vertices) v = n.apply(v);
  if (!mesh.normals.empty()) mesh.compute_normals();
}

void transform_mesh(TriangleMesh& mesh, double scale, const Vec3& translation) {
  for (auto& v : mesh.vertices) v = v * scale + translation;
  if (!mesh.normals.empty()) mesh.compute_normals();
}

Normalization normalize_mesh(TriangleMesh& mesh, double half_extent) {
  const Aabb b = bounds(mesh);
  if (!b.valid()) throw InputError("cannot normalize an empty mesh");
  const double longest = b.extent().maxCoeff();
  if (!(longest > 0.0)) throw InputError("cannot normalize a mesh with zero extent");
  Normalization n{b.center(), 2.0 * half_extent / longest};
  apply_normalization(mesh, n);
  return n;
}

std::vector<std::array<std::uint32_t, 2>> unique_edges(const TriangleMesh& mesh) {
  std::vector<std::array<std::uint32_t, 2>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

TopologyReport analyze_topology(const TriangleMesh& mesh) {
  TopologyReport r;
  r.face_count = mesh.faces.size();
  std::unordered_map<std::uint64_t, int> undirected;
  std::unordered_map<std::uint64_t, int> directed;
  std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
  auto key = [](std::uint64_t a, std::uint64_t b) { return (a << 32) | b; };
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = f[k], b = f[(k + 1) % 3];
      used[a] = 1;
      ++directed[key(a, b)];
      ++undirected[key(std::min(a, b), std::max(a, b))];
    }
  for (auto u : used) r.vertex_count += u;
  r.edge_count = undirected.size();
  for (const auto& [k, n] : undirected) {
    if (n == 1) ++r.boundary_edges;
    if (n > 2) ++r.nonmanifold_edges;
  }
  for (const auto& [k, n] : directed)
    if (n > 1) ++r.inconsistent_edges;
  r.euler_characteristic = static_cast<long>(r.vertex_count) - static_cast<long>(r.edge_count) +
                           static_cast<long>(r.face_count);
  return r;
}

}  // namespace touchrecon
