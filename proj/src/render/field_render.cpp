#include "touchrecon/render/field_render.hpp"

#include "touchrecon/common/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace touchrecon {

bool clip_to_domain(const Ray& ray, double& t0, double& t1) {
  t0 = ray.t_min;
  t1 = ray.t_max;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.direction[a];
    if (d == 0.0) {
      if (o < -1.0 || o > 1.0) return false;
      continue;
    }
    double ta = (-1.0 - o) / d, tb = (1.0 - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 <= t1 && std::isfinite(t1);
}

namespace {

// Illinois variant of regula falsi on [a, b] with f(a) >= 0 > f(b).
double refine_crossing(const GridSDF& field, const Ray& ray, double a, double fa, double b, double fb,
                       int iterations) {
  int side = 0;
  double t = a;
  for (int it = 0; it < iterations; ++it) {
    t = (a * fb - b * fa) / (fb - fa);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    const double ft = field.value(ray.at(t));
    if (ft == 0.0 || b - a < 1e-15) break;
    if (ft > 0.0) {
      a = t;
      fa = ft;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = t;
      fb = ft;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (std::abs(ft) < 1e-13) break;
  }
  return t;
}

}  // namespace

RayRender render_ray(const GridSDF& field, const Ray& ray, const FieldBounds* bounds, const RenderOptions& options) {
  RayRender out;
  double t0, t1;
  if (!clip_to_domain(ray, t0, t1)) return out;
  out.in_domain = true;
  const int n = std::max(options.samples, 2);
  const double step = (t1 - t0) / (n - 1);

  double prev_t = t0;
  double prev_f = std::numeric_limits<double>::quiet_NaN();  // NaN: skipped, known positive
  out.closest_t = t0;
  out.closest_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double t = k + 1 == n ? t1 : t0 + step * k;
    const Vec3 x = ray.at(t);
    if (bounds && bounds->lower(x) > 0.0) {
      // Every sample strictly before the cell exit is in the same cell.
      const double exit_t = t + bounds->cell_exit(x, ray.direction) - 1e-12;
      int last = k;
      if (std::isfinite(exit_t)) last = std::max(k, std::min(n - 2, static_cast<int>(std::ceil((exit_t - t0) / step)) - 1));
      while (last > k && t0 + step * last >= exit_t) --last;
      k = last;
      prev_t = t0 + step * k;
      prev_f = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double f = field.value(x);
    if (f < out.closest_value) {
      out.closest_value = f;
      out.closest_t = t;
    }
    if (f < 0.0 && k > 0) {
      double fa = prev_f;
      if (std::isnan(fa)) fa = field.value(ray.at(prev_t));
      if (fa >= 0.0) {
        out.hit = true;
        out.closest_t = prev_t;
        out.closest_value = fa;
        out.depth = refine_crossing(field, ray, prev_t, fa, t, f, options.refine_iterations);
        break;
      }
    }
    prev_t = t;
    prev_f = f;
  }
  if (!out.hit) {
    // The skipped samples are all positive; if none was evaluated report the
    // entry point.
    if (!std::isfinite(out.closest_value)) {
      out.closest_t = t0;
      out.closest_value = field.value(ray.at(t0));
    }
    return out;
  }
  out.point = ray.at(out.depth);
  const FieldSample s = field.eval(out.point);
  const double gn = s.grad.norm();
  const double dd = s.grad.dot(ray.direction);
  if (gn == 0.0 || std::abs(dd) < options.min_directional_derivative) {
    out.degenerate = true;
    out.normal = gn > 0.0 ? Vec3(s.grad / gn) : Vec3::UnitZ();
    return out;
  }
  out.normal = s.grad / gn;
  return out;
}

void render_ray_backward(const GridSDF& field, const Ray& ray, const RayRender& r, double grad_depth,
                         const Vec3& grad_normal, std::span<double> grad) {
  if (!r.hit || r.degenerate) return;
  FieldStencil st;
  field.stencil(r.point, st);
  const double gnorm = st.grad.norm();
  const Vec3 n = st.grad / gnorm;
  const Vec3& dir = ray.direction;
  const double dd = st.grad.dot(dir);
  // n = g/|g| with g = grad f(x(θ), θ) and x = o + d(θ) dir, where
  // f(x(θ), θ) = 0 gives dd/dθ_j = -w_j / (g . dir).
  const Vec3 q = (grad_normal - n * n.dot(grad_normal)) / gnorm;
  const double a = -(grad_depth + q.dot(st.hessian * dir)) / dd;
  for (int j = 0; j < st.count; ++j) grad[st.index[j]] += a * st.weight[j] + q.dot(st.dweight[j]);
}

void field_value_backward(const GridSDF& field, const Vec3& x, double weight, std::span<double> grad) {
  FieldStencil st;
  field.stencil(x, st);
  for (int j = 0; j < st.count; ++j) grad[st.index[j]] += weight * st.weight[j];
}

FieldImage render_normal_image(const GridSDF& field, const ViewCamera& cam, const FieldBounds* bounds,
                               const RenderOptions& options) {
  FieldImage out;
  out.camera = cam;
  out.image = NormalImage(cam.width, cam.height);
  out.rays.resize(static_cast<std::size_t>(cam.width) * cam.height);
  const Mat3 rt = cam.pose.rotation.transpose();
  parallel_for(cam.height, [&](std::ptrdiff_t row) {
    for (int col = 0; col < cam.width; ++col) {
      const Ray ray = cam.pixel_ray(static_cast<int>(row), col);
      RayRender r = render_ray(field, ray, bounds, options);
      if (r.hit && !r.degenerate) {
        out.image.normals(static_cast<int>(row), col) = rt * r.normal;
        out.image.hit(static_cast<int>(row), col) = 1;
      }
      out.rays[static_cast<std::size_t>(row) * cam.width + col] = r;
    }
  });
  return out;
}

void render_normal_image_backward(const GridSDF& field, const FieldImage& img, const Grid2<Vec3>& grad_image,
                                  std::span<double> grad) {
  const ViewCamera& cam = img.camera;
  if (grad_image.width() != cam.width || grad_image.height() != cam.height)
    throw InputError("gradient image shape does not match the render");
  for (int row = 0; row < cam.height; ++row)
    for (int col = 0; col < cam.width; ++col) {
      if (!img.image.hit(row, col)) continue;
      const Vec3& g = grad_image(row, col);
      if (g.isZero(0.0)) continue;
      render_ray_backward(field, cam.pixel_ray(row, col), img.rays[static_cast<std::size_t>(row) * cam.width + col],
                          0.0, cam.pose.rotation * g, grad);
    }
}

}  // namespace touchrecon
