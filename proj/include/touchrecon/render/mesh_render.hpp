#pragma once

#include "touchrecon/field/marching_tetrahedra.hpp"
#include "touchrecon/geometry/mesh.hpp"
#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/render/camera.hpp"

#include <span>
#include <vector>

namespace touchrecon {

/// Surface point of a mesh along a ray: o + t dir = (1-u-v) p0 + u p1 + v p2.
struct MeshHit {
  int face = -1;
  double t = 0.0, u = 0.0, v = 0.0;
  bool hit() const { return face >= 0; }
};

/// Solves the ray/triangle-plane system without rejecting outside points.
/// Returns false for rays parallel to the plane.
bool intersect_triangle_plane(const TriangleMesh& mesh, int face, const Ray& ray, MeshHit& out);

/// Normalized barycentric blend of the vertex normals (mesh.normals).
Vec3 interpolated_normal(const TriangleMesh& mesh, const MeshHit& h);

/// Chains dL/dt and dL/dn (world frame, n the interpolated normal) of a hit
/// into vertex positions. The normal's dependence on the vertex normals is
/// written to `normal_grad`; pass both through vertex_normal_backward.
void mesh_hit_backward(const TriangleMesh& mesh, const Ray& ray, const MeshHit& h, double grad_t,
                       const Vec3& grad_normal, std::span<Vec3> position_grad, std::span<Vec3> normal_grad);

/// dL/d(unit vertex normals) to dL/d(vertex positions), for area-weighted
/// normals as produced by TriangleMesh::compute_normals.
void vertex_normal_backward(const TriangleMesh& mesh, std::span<const Vec3> normal_grad, std::span<Vec3> position_grad);

struct MeshImage {
  ViewCamera camera;
  NormalImage image;
  std::vector<MeshHit> hits;  // row-major, one per pixel
};

/// Z-buffer rasterization followed by an exact ray/triangle solve at each
/// covered pixel center. The mesh must carry vertex normals.
MeshImage render_mesh_normals(const TriangleMesh& mesh, const ViewCamera& cam);

/// Adds dL/d(vertex positions) for per-pixel dL/dN (camera frame). Coverage
/// changes at silhouettes are not differentiated.
void render_mesh_normals_backward(const TriangleMesh& mesh, const MeshImage& img, const Grid2<Vec3>& grad_image,
                                  std::span<Vec3> position_grad);

struct TetRender {
  MtResult surface;
  MeshImage render;
};

TetRender render_tet_normals(const TetGrid& tet, const ViewCamera& cam);
void render_tet_normals_backward(const TetGrid& tet, const TetRender& r, const Grid2<Vec3>& grad_image,
                                 std::span<double> grad);

}  // namespace touchrecon
