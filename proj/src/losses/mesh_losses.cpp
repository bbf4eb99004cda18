#include "touchrecon/losses/mesh_losses.hpp"
#include "touchrecon/render/mesh_render.hpp"

#include <cmath>

namespace touchrecon {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

NormalConsistencyResult normal_consistency_loss(const TriangleMesh& mesh, double weight,
                                                std::span<Vec3> position_grad) {
  NormalConsistencyResult out;
  const auto edges = unique_edges(mesh);
  if (edges.empty()) {
    out.empty = true;
    return out;
  }
  if (mesh.normals.size() != mesh.vertices.size()) throw InputError("normal consistency needs vertex normals");
  out.edges = edges.size();
  const double inv = 1.0 / static_cast<double>(edges.size());
  std::vector<Vec3> ng(mesh.vertices.size(), Vec3::Zero());
  for (const auto& [i, j] : edges) {
    out.value += (1.0 - mesh.normals[i].dot(mesh.normals[j])) * inv;
    ng[i] -= weight * inv * mesh.normals[j];
    ng[j] -= weight * inv * mesh.normals[i];
  }
  if (weight > 0.0) vertex_normal_backward(mesh, ng, position_grad);
  return out;
}

MeshDepthNormalResult mesh_depth_normal_loss(const TriangleMesh& mesh, const RayCaster& caster,
                                             std::span<const RaySample> samples, double w_depth, double w_normal,
                                             std::span<Vec3> position_grad) {
  if (samples.empty()) throw InputError("depth/normal loss needs at least one ray");
  MeshDepthNormalResult out;
  out.rays = samples.size();
  const double inv = 1.0 / static_cast<double>(samples.size());
  std::vector<Vec3> ng(mesh.vertices.size(), Vec3::Zero());
  for (const RaySample& s : samples) {
    const auto hit = caster.cast(s.ray);
    MeshHit h;
    if (!hit || !intersect_triangle_plane(mesh, static_cast<int>(hit->face), s.ray, h)) {
      ++out.misses;
      continue;
    }
    const Vec3 n = interpolated_normal(mesh, h);
    const double e = h.t - s.d;
    const Vec3 dn = n - s.n;
    out.depth += std::abs(e) * inv;
    out.normal += dn.cwiseAbs().sum() * inv;
    const Vec3 gn = w_normal * inv * Vec3(sign(dn.x()), sign(dn.y()), sign(dn.z()));
    mesh_hit_backward(mesh, s.ray, h, w_depth * inv * sign(e), gn, position_grad, ng);
  }
  vertex_normal_backward(mesh, ng, position_grad);
  return out;
}

}  // namespace touchrecon
