#include "touchrecon/touchsim/sensor.hpp"

#include <fmt/format.h>

#include <cmath>

namespace touchrecon {

void SensorSpec::validate() const {
  if (width_px < 1 || height_px < 1) throw InputError("sensor resolution must be positive");
  if (!(sensing_width > 0.0 && sensing_height > 0.0)) throw InputError("sensing area must be positive");
  const double px_aspect = static_cast<double>(width_px) / height_px;
  const double area_aspect = sensing_width / sensing_height;
  if (std::abs(px_aspect - area_aspect) > 1e-6)
    throw InputError(fmt::format("sensor pixel aspect {} does not match sensing-area aspect {}", px_aspect,
                                 area_aspect));
  if (!(press_depth > 0.0)) throw InputError("press_depth must be positive");
  if (press_depth > max_indentation) throw InputError("press_depth exceeds max_indentation");
  if (!(min_contact_fraction > 0.0 && min_contact_fraction < 1.0))
    throw InputError("min_contact_fraction must lie in (0, 1)");
}

double TactileObservation::contact_fraction() const {
  return mask.empty() ? 0.0 : static_cast<double>(count_true(mask)) / static_cast<double>(mask.size());
}

void TactileObservation::validate(const SensorSpec& spec) const {
  sensor_pose.validate();
  if (depth.width() != spec.width_px || depth.height() != spec.height_px || mask.width() != spec.width_px ||
      mask.height() != spec.height_px)
    throw InputError(fmt::format("observation {} does not match the {}x{} sensor", touch_id, spec.width_px,
                                 spec.height_px));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!mask[i]) continue;
    const double d = depth[i];
    if (!std::isfinite(d) || d < 0.0 || d > spec.max_indentation * (1.0 + 1e-6))
      throw InputError(fmt::format("observation {}: depth {} outside [0, {}]", touch_id, d, spec.max_indentation));
  }
  if (contact_fraction() < spec.min_contact_fraction)
    throw InputError(fmt::format("observation {}: contact fraction {} below {}", touch_id, contact_fraction(),
                                 spec.min_contact_fraction));
}

}  // namespace touchrecon
