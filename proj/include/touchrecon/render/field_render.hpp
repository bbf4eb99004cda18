#pragma once

#include "touchrecon/field/grid_sdf.hpp"
#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/render/camera.hpp"

#include <span>
#include <vector>

namespace touchrecon {

struct RenderOptions {
  int samples = 512;
  int refine_iterations = 60;
  double min_directional_derivative = 1e-8;
};

/// Result of marching one ray through the field. `depth` is the ray
/// parameter of the first outside-to-inside crossing.
struct RayRender {
  bool hit = false;
  bool degenerate = false;  // |grad f . dir| below the threshold; excluded from losses
  double depth = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  // Ray parameter and field value at the last sample before the crossing;
  // a missed ray reports the sample with the smallest field value instead.
  double closest_t = 0.0;
  double closest_value = 0.0;
  bool in_domain = false;
};

/// Entry/exit parameters of the ray in [-1,1]^3 clipped to [t_min, t_max].
bool clip_to_domain(const Ray& ray, double& t0, double& t1);

/// Fixed-step marching with regula falsi refinement. `bounds` may be null;
/// when given, samples whose cell lower bound is positive are skipped.
RayRender render_ray(const GridSDF& field, const Ray& ray, const FieldBounds* bounds = nullptr,
                     const RenderOptions& options = {});

/// Adds weight * (dL/dd * dd/dθ + dL/dn . dn/dθ) into `grad` for a hit ray.
/// dL/dn is taken in world coordinates.
void render_ray_backward(const GridSDF& field, const Ray& ray, const RayRender& r, double grad_depth,
                         const Vec3& grad_normal, std::span<double> grad);

/// Adds weight * df(x)/dθ into `grad`.
void field_value_backward(const GridSDF& field, const Vec3& x, double weight, std::span<double> grad);

struct FieldImage {
  ViewCamera camera;
  NormalImage image;
  std::vector<RayRender> rays;  // row-major, one per pixel
};

FieldImage render_normal_image(const GridSDF& field, const ViewCamera& cam, const FieldBounds* bounds = nullptr,
                               const RenderOptions& options = {});

/// Chains per-pixel dL/dN (camera frame) into the field parameters. Only hit,
/// non-degenerate pixels contribute.
void render_normal_image_backward(const GridSDF& field, const FieldImage& img, const Grid2<Vec3>& grad_image,
                                  std::span<double> grad);

}  // namespace touchrecon
