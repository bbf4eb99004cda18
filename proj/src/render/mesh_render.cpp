#include "touchrecon/render/mesh_render.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace touchrecon {

bool intersect_triangle_plane(const TriangleMesh& mesh, int face, const Ray& ray, MeshHit& out) {
  const Face& f = mesh.faces[face];
  const Vec3& p0 = mesh.vertices[f[0]];
  const Vec3 e1 = mesh.vertices[f[1]] - p0;
  const Vec3 e2 = mesh.vertices[f[2]] - p0;
  const Vec3 pv = ray.direction.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - p0;
  const Vec3 qv = s.cross(e1);
  out.face = face;
  out.u = s.dot(pv) * inv;
  out.v = ray.direction.dot(qv) * inv;
  out.t = e2.dot(qv) * inv;
  return true;
}

namespace {

Vec3 blended_normal(const TriangleMesh& mesh, const MeshHit& h) {
  const Face& f = mesh.faces[h.face];
  return (1.0 - h.u - h.v) * mesh.normals[f[0]] + h.u * mesh.normals[f[1]] + h.v * mesh.normals[f[2]];
}

}  // namespace

Vec3 interpolated_normal(const TriangleMesh& mesh, const MeshHit& h) {
  const Vec3 m = blended_normal(mesh, h);
  const double len = m.norm();
  return len > 0.0 ? Vec3(m / len) : Vec3::UnitZ();
}

void mesh_hit_backward(const TriangleMesh& mesh, const Ray& ray, const MeshHit& h, double grad_t,
                       const Vec3& grad_normal, std::span<Vec3> position_grad, std::span<Vec3> normal_grad) {
  const Face& f = mesh.faces[h.face];
  const Vec3 m = blended_normal(mesh, h);
  const double len = m.norm();
  if (!(len > 0.0)) return;
  const Vec3 n = m / len;
  const Vec3 gm = (grad_normal - n * n.dot(grad_normal)) / len;
  const double b[3] = {1.0 - h.u - h.v, h.u, h.v};
  for (int k = 0; k < 3; ++k) normal_grad[f[k]] += b[k] * gm;

  // F(t,u,v; p) = p0 + u e1 + v e2 - t dir - o = 0, so with A = [-dir e1 e2]
  // and dF/dp_k = b_k I: dL/dp_k = -b_k A^-T (dL/dt, dL/du, dL/dv).
  const Vec3& p0 = mesh.vertices[f[0]];
  const Vec3 e1 = mesh.vertices[f[1]] - p0;
  const Vec3 e2 = mesh.vertices[f[2]] - p0;
  const Vec3 gx(grad_t, gm.dot(mesh.normals[f[1]] - mesh.normals[f[0]]),
                gm.dot(mesh.normals[f[2]] - mesh.normals[f[0]]));
  if (gx.isZero(0.0)) return;
  Mat3 a;
  a.col(0) = -ray.direction;
  a.col(1) = e1;
  a.col(2) = e2;
  const Eigen::PartialPivLU<Mat3> lu(a.transpose());
  const Vec3 y = lu.solve(gx);
  if (!y.allFinite()) return;
  for (int k = 0; k < 3; ++k) position_grad[f[k]] -= b[k] * y;
}

void vertex_normal_backward(const TriangleMesh& mesh, std::span<const Vec3> normal_grad,
                            std::span<Vec3> position_grad) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<Vec3> acc(nv, Vec3::Zero());
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Vec3 c = mesh.face_cross(fi);
    for (auto v : mesh.faces[fi]) acc[v] += c;
  }
  // dL/d(unnormalized sum) per vertex.
  std::vector<Vec3> gacc(nv, Vec3::Zero());
  for (std::size_t i = 0; i < nv; ++i) {
    const double len = acc[i].norm();
    if (!(len > 0.0) || normal_grad[i].isZero(0.0)) continue;
    const Vec3 n = acc[i] / len;
    gacc[i] = (normal_grad[i] - n * n.dot(normal_grad[i])) / len;
  }
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    const Vec3 g = gacc[f[0]] + gacc[f[1]] + gacc[f[2]];
    if (g.isZero(0.0)) continue;
    const Vec3& p0 = mesh.vertices[f[0]];
    const Vec3 e1 = mesh.vertices[f[1]] - p0;
    const Vec3 e2 = mesh.vertices[f[2]] - p0;
    // c = e1 x e2: g . (de1 x e2) = de1 . (e2 x g), g . (e1 x de2) = de2 . (g x e1).
    const Vec3 g1 = e2.cross(g);
    const Vec3 g2 = g.cross(e1);
    position_grad[f[1]] += g1;
    position_grad[f[2]] += g2;
    position_grad[f[0]] -= g1 + g2;
  }
}

MeshImage render_mesh_normals(const TriangleMesh& mesh, const ViewCamera& cam) {
  MeshImage out;
  out.camera = cam;
  out.image = NormalImage(cam.width, cam.height);
  const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;
  out.hits.assign(npix, MeshHit{});
  if (mesh.empty()) return out;
  if (mesh.normals.size() != mesh.vertices.size()) throw InputError("mesh render needs vertex normals");

  constexpr double kNear = 1e-3;
  const Mat3 rt = cam.pose.rotation.transpose();
  std::vector<Vec3> pc(mesh.vertices.size());
  std::vector<Vec2> ps(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    pc[i] = rt * (mesh.vertices[i] - cam.pose.translation);
    ps[i] = pc[i].z() > kNear ? cam.project_camera(pc[i]) : Vec2::Zero();
  }

  std::vector<double> zbuf(npix, std::numeric_limits<double>::infinity());
  std::vector<int> owner(npix, -1);
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    if (pc[f[0]].z() <= kNear || pc[f[1]].z() <= kNear || pc[f[2]].z() <= kNear) continue;
    const Vec2 &a = ps[f[0]], &b = ps[f[1]], &c = ps[f[2]];
    const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (area == 0.0) continue;
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
    const int c1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
    const int r1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));
    const double inv_area = 1.0 / area;
    const double iz0 = 1.0 / pc[f[0]].z(), iz1 = 1.0 / pc[f[1]].z(), iz2 = 1.0 / pc[f[2]].z();
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col) {
        const Vec2 p(col + 0.5, row + 0.5);
        const double w0 = ((b - p).x() * (c - p).y() - (b - p).y() * (c - p).x()) * inv_area;
        const double w1 = ((c - p).x() * (a - p).y() - (c - p).y() * (a - p).x()) * inv_area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double z = 1.0 / (w0 * iz0 + w1 * iz1 + w2 * iz2);
        const std::size_t idx = static_cast<std::size_t>(row) * cam.width + col;
        if (z < zbuf[idx]) {
          zbuf[idx] = z;
          owner[idx] = static_cast<int>(fi);
        }
      }
  }

  for (int row = 0; row < cam.height; ++row)
    for (int col = 0; col < cam.width; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * cam.width + col;
      if (owner[idx] < 0) continue;
      MeshHit h;
      if (!intersect_triangle_plane(mesh, owner[idx], cam.pixel_ray(row, col), h)) continue;
      out.hits[idx] = h;
      out.image.normals(row, col) = rt * interpolated_normal(mesh, h);
      out.image.hit(row, col) = 1;
    }
  return out;
}

void render_mesh_normals_backward(const TriangleMesh& mesh, const MeshImage& img, const Grid2<Vec3>& grad_image,
                                  std::span<Vec3> position_grad) {
  const ViewCamera& cam = img.camera;
  if (grad_image.width() != cam.width || grad_image.height() != cam.height)
    throw InputError("gradient image shape does not match the render");
  std::vector<Vec3> normal_grad(mesh.vertices.size(), Vec3::Zero());
  for (int row = 0; row < cam.height; ++row)
    for (int col = 0; col < cam.width; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * cam.width + col;
      if (!img.hits[idx].hit()) continue;
      const Vec3& g = grad_image(row, col);
      if (g.isZero(0.0)) continue;
      mesh_hit_backward(mesh, cam.pixel_ray(row, col), img.hits[idx], 0.0, cam.pose.rotation * g, position_grad,
                        normal_grad);
    }
  vertex_normal_backward(mesh, normal_grad, position_grad);
}

TetRender render_tet_normals(const TetGrid& tet, const ViewCamera& cam) {
  TetRender r;
  r.surface = extract_surface(tet);
  r.surface.mesh.compute_normals();
  r.render = render_mesh_normals(r.surface.mesh, cam);
  return r;
}

void render_tet_normals_backward(const TetGrid& tet, const TetRender& r, const Grid2<Vec3>& grad_image,
                                 std::span<double> grad) {
  if (r.surface.mesh.empty()) return;
  std::vector<Vec3> pg(r.surface.mesh.vertices.size(), Vec3::Zero());
  render_mesh_normals_backward(r.surface.mesh, r.render, grad_image, pg);
  marching_tetrahedra_backward(tet, r.surface, pg, grad);
}

}  // namespace touchrecon
