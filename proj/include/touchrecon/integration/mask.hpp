#pragma once

#include "touchrecon/common/grid2.hpp"

namespace touchrecon {

/// depth > threshold, reduced to its largest 4-connected component (the
/// first in scan order on ties).
Mask mask_from_depth(const Grid2<double>& depth, double threshold);

/// Keeps pixels whose 4-neighbors are all set (pixels outside the frame count
/// as unset).
Mask erode_mask(const Mask& mask);

Mask largest_component(const Mask& mask);

}  // namespace touchrecon
