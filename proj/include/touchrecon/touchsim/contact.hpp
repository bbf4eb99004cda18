#pragma once

#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/touchsim/sensor.hpp"

#include <optional>

namespace touchrecon {

/// Casts one ray per pixel along the sensor +z axis, starting behind the gel
/// plane, and records the indentation clamped to [0, max_indentation].
/// Returns nullopt when the contact fraction is below the spec minimum.
std::optional<TactileObservation> render_contact(const RayCaster& caster, const Pose& pose, const SensorSpec& spec,
                                                 int touch_id = 0);

/// Same as render_contact without the discard rule.
TactileObservation render_contact_raw(const RayCaster& caster, const Pose& pose, const SensorSpec& spec,
                                      int touch_id = 0);

/// Masked, normalized Gaussian blur of the depth map; the mask is unchanged.
/// sigma_px = 0 returns an exact copy.
TactileObservation gel_filter(const TactileObservation& obs, double sigma_px);

}  // namespace touchrecon
