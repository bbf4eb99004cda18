#pragma once

#include "touchrecon/common/rng.hpp"
#include "touchrecon/integration/virtual_observation.hpp"
#include "touchrecon/touchsim/observation_io.hpp"

#include <span>
#include <vector>

namespace touchrecon {

/// Supervision pooled across touches, in field domain units (meters divided
/// by meters_per_unit). Directions and normals are unit vectors and need no
/// scaling.
struct TouchData {
  double meters_per_unit = 0.1;
  std::vector<Pose> sensor_poses;  // domain units
  std::vector<RaySample> rays;
  std::vector<std::size_t> offsets{0};  // rays of touch i: [offsets[i], offsets[i + 1])

  std::size_t touch_count() const { return offsets.size() - 1; }
  std::span<const RaySample> touch_rays(std::size_t i) const {
    return std::span<const RaySample>(rays).subspan(offsets[i], offsets[i + 1] - offsets[i]);
  }
};

/// Metric ray sample scaled into domain units.
RaySample to_domain(const RaySample& s, double meters_per_unit);

/// Adds one touch given its virtual observation and metric sensor pose.
void add_touch(TouchData& data, const VirtualObservation& vobs, const Pose& sensor_pose);

/// Virtual observations of every touch in the set, pooled. Throws InputError
/// when the set is empty.
TouchData prepare_touch_data(const ObservationSet& set, double standoff = 0.020);

/// `count` rays drawn uniformly with replacement from the pool.
std::vector<RaySample> sample_ray_batch(const TouchData& data, int count, Rng& rng);

}  // namespace touchrecon
