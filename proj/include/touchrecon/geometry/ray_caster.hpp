#pragma once

#include "touchrecon/geometry/mesh.hpp"

#include <limits>
#include <optional>

namespace touchrecon {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();

  Vec3 at(double t) const { return origin + t * direction; }
  void validate() const;  // unit direction within 1e-9, t_min < t_max
};

struct Hit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // geometric face normal, facing against the ray
  std::uint32_t face = 0;
  bool front_facing = true;  // ray arrives on the side the face winding points to
  double u = 0.0, v = 0.0;   // barycentrics of vertices 1 and 2
};

/// Bounding-volume hierarchy over a triangle mesh (binned SAH, at most four
/// triangles per leaf). Immutable after construction.
///
/// Queries may pass an anchor: the ray origin is then taken relative to it and
/// all arithmetic is done on (anchor - vertex) differences. Translating mesh,
/// anchor and nothing else by a value that keeps those differences exact gives
/// bit-identical hits.
class RayCaster {
 public:
  explicit RayCaster(TriangleMesh mesh);

  std::optional<Hit> cast(const Ray& ray) const { return cast(ray, Vec3::Zero()); }
  std::optional<Hit> cast(const Ray& ray, const Vec3& anchor) const;

  /// Exhaustive test of every triangle; reference for the hierarchy.
  std::optional<Hit> cast_brute_force(const Ray& ray, const Vec3& anchor = Vec3::Zero()) const;

  const TriangleMesh& mesh() const { return mesh_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // first triangle (leaf) or right child (inner)
    std::uint32_t count = 0;  // 0 for inner nodes; left child is the next node
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  bool intersect_triangle(std::uint32_t face, const Vec3& local, const Vec3& anchor, const Vec3& dir,
                          double t_min, double t_max, Hit& hit) const;
  Hit finish(const Hit& h, const Vec3& local, const Vec3& anchor, const Vec3& dir) const;

  TriangleMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;  // triangle indices in leaf order
  std::vector<Aabb> tri_boxes_;
  std::vector<Vec3> centroids_;
};

RayCaster build_ray_caster(const TriangleMesh& mesh);
std::optional<Hit> cast_ray(const RayCaster& caster, const Ray& ray);

}  // namespace touchrecon
