#pragma once

#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/touchsim/sensor.hpp"

#include <string>
#include <vector>

namespace touchrecon {

/// Orthographic depth/normal image seen from a camera `standoff` meters
/// behind the gel plane, looking along the sensor +z axis.
struct VirtualObservation {
  Pose camera_pose;  // relative to the sensor frame
  double standoff = 0.020;
  double pixel_pitch = 0.0;
  Grid2<double> depth;    // meters from the camera plane
  Grid2<Vec3> normals;    // camera frame, z < 0 (facing the camera)
  Mask mask;
  int touch_id = 0;

  /// Pixel center on the camera plane (camera frame, z = 0).
  Vec2 pixel_center(int row, int col) const {
    return {(col + 0.5 - 0.5 * depth.width()) * pixel_pitch, (row + 0.5 - 0.5 * depth.height()) * pixel_pitch};
  }
};

/// One supervised ray: observed depth d along a unit direction and the
/// observed surface normal n, both in the frame of the emitted ray.
struct RaySample {
  Ray ray;
  double d = 0.0;
  Vec3 n = -Vec3::UnitZ();
  int touch_id = 0;
};

/// The gel plane maps to camera depth `standoff` and indentation moves the
/// surface toward the camera: depth_cam = standoff - indentation. Normals are
/// central differences of depth_cam on the 1-pixel eroded mask.
VirtualObservation to_virtual_observation(const TactileObservation& obs, const SensorSpec& spec,
                                          double standoff = 0.020);

/// One sample per masked pixel, transformed by world_pose * camera_pose.
std::vector<RaySample> observation_rays(const VirtualObservation& vobs, const Pose& world_pose);

// Sidecar keys: standoff_m, pixel_pitch_m, pose (12 numbers, row-major R then
// t, relative to the sensor frame), width_px, height_px, touch_id.
void write_virtual_observation(const std::string& dir, const VirtualObservation& vobs);
VirtualObservation read_virtual_observation(const std::string& dir);

}  // namespace touchrecon
