#pragma once

#include "touchrecon/common/grid2.hpp"
#include "touchrecon/geometry/pose.hpp"

namespace touchrecon {

/// Rectangular gel sensor. Lengths in meters.
struct SensorSpec {
  int width_px = 320;
  int height_px = 240;
  double sensing_width = 0.020;
  double sensing_height = 0.015;
  double press_depth = 0.001;
  double max_indentation = 0.002;
  double min_contact_fraction = 0.05;

  double pixel_pitch() const { return sensing_width / width_px; }
  /// Pixel center on the gel plane (sensor frame, z = 0). Column runs along
  /// +x, row along +y.
  Vec2 pixel_center(int row, int col) const {
    const double p = pixel_pitch();
    return {(col + 0.5 - 0.5 * width_px) * p, (row + 0.5 - 0.5 * height_px) * p};
  }
  void validate() const;
};

/// One contact reading. The sensor frame has z pointing into the object and
/// the pressed gel plane at z = 0; depth is the indentation behind that plane.
struct TactileObservation {
  Pose sensor_pose;
  Grid2<double> depth;
  Mask mask;
  int touch_id = 0;

  double contact_fraction() const;
  void validate(const SensorSpec& spec) const;
};

}  // namespace touchrecon
