#include "touchrecon/losses/weights.hpp"
#include "touchrecon/common/types.hpp"

#include <algorithm>

namespace touchrecon {

double Ramp::at(int step) const {
  if (steps <= 0) return end;
  const double u = std::min(static_cast<double>(std::max(step, 0)) / steps, 1.0);
  return start + (end - start) * u;
}

void LossWeights::validate() const {
  for (double w : {depth, normal.start, normal.end, sdf, freespace, eikonal, sds, normal_consistency})
    if (!(w >= 0.0)) throw InputError("loss weights must be non-negative");
  if (normal.steps < 0) throw InputError("normal ramp steps must be non-negative");
  if (!(delta > 0.0)) throw InputError("truncation distance must be positive");
  if (band_samples < 1 || freespace_samples < 1) throw InputError("per-ray sample counts must be at least 1");
}

}  // namespace touchrecon
