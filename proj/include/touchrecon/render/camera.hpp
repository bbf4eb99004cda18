#pragma once

#include "touchrecon/common/grid2.hpp"
#include "touchrecon/common/rng.hpp"
#include "touchrecon/geometry/pose.hpp"
#include "touchrecon/geometry/ray_caster.hpp"

#include <vector>

namespace touchrecon {

/// Pinhole camera. The pose maps camera to world; the camera looks along its
/// +z axis with x to the right and y down the image.
struct ViewCamera {
  Pose pose;
  double fov_y_deg = 45.0;
  int width = 64;
  int height = 64;

  double focal() const;  // pixels
  Vec3 eye() const { return pose.translation; }
  /// Unit world-space ray through the center of pixel (row, col).
  Ray pixel_ray(int row, int col) const;
  /// Camera-frame point to continuous pixel coordinates (col, row) of the
  /// image plane, pixel centers at half-integers.
  Vec2 project_camera(const Vec3& pc) const;
};

/// Camera at `eye` looking at `target`; world +z fixes the roll.
ViewCamera look_at(const Vec3& eye, const Vec3& target, double fov_y_deg, int width, int height);

/// Directions uniform on the sphere of radius `radius` around the origin,
/// all looking at the origin.
std::vector<ViewCamera> sample_views(Rng& rng, int count, double radius, double fov_y_deg, int width, int height);

/// Per-pixel camera-frame unit normals; pixels without a surface hold the
/// background normal (0, 0, 1).
struct NormalImage {
  Grid2<Vec3> normals;
  Mask hit;

  NormalImage() = default;
  NormalImage(int width, int height) : normals(width, height, background()), hit(width, height, 0) {}
  static Vec3 background() { return Vec3::UnitZ(); }
  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
};

}  // namespace touchrecon
