#include "touchrecon/render/camera.hpp"

#include <cmath>
#include <numbers>

namespace touchrecon {

double ViewCamera::focal() const {
  return 0.5 * height / std::tan(0.5 * fov_y_deg * std::numbers::pi / 180.0);
}

Ray ViewCamera::pixel_ray(int row, int col) const {
  const double f = focal();
  const Vec3 d((col + 0.5 - 0.5 * width) / f, (row + 0.5 - 0.5 * height) / f, 1.0);
  Ray r;
  r.origin = pose.translation;
  r.direction = pose.rotation * d.normalized();
  return r;
}

Vec2 ViewCamera::project_camera(const Vec3& pc) const {
  const double f = focal();
  return {f * pc.x() / pc.z() + 0.5 * width, f * pc.y() / pc.z() + 0.5 * height};
}

ViewCamera look_at(const Vec3& eye, const Vec3& target, double fov_y_deg, int width, int height) {
  ViewCamera cam;
  cam.pose = Pose::from_z_axis(target - eye, eye, Vec3::UnitZ());
  cam.fov_y_deg = fov_y_deg;
  cam.width = width;
  cam.height = height;
  return cam;
}

std::vector<ViewCamera> sample_views(Rng& rng, int count, double radius, double fov_y_deg, int width, int height) {
  if (count < 1) throw InputError("view count must be at least 1");
  std::vector<ViewCamera> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(look_at(rng.unit_vector() * radius, Vec3::Zero(), fov_y_deg, width, height));
  return out;
}

}  // namespace touchrecon
