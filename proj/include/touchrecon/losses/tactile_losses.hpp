#pragma once

#include "touchrecon/common/rng.hpp"
#include "touchrecon/field/grid_sdf.hpp"
#include "touchrecon/integration/virtual_observation.hpp"
#include "touchrecon/render/field_render.hpp"

#include <span>

namespace touchrecon {

// Every function below returns loss values and adds the weighted parameter
// gradient into `grad` (laid out like GridSDF::params()). Rays and depths are
// in field domain units.

struct DepthNormalResult {
  double depth = 0.0;   // mean |d - d_θ|, misses contribute ReLU(f(x(r, d)))
  double normal = 0.0;  // mean ||n - n_θ||_1 over hits
  std::size_t rays = 0;        // rays in the means
  std::size_t misses = 0;
  std::size_t degenerate = 0;  // excluded
};

DepthNormalResult depth_normal_loss(const GridSDF& field, std::span<const RaySample> samples,
                                    std::span<const RayRender> predictions, double w_depth, double w_normal,
                                    std::span<double> grad);

struct SampledLoss {
  double value = 0.0;
  std::size_t samples = 0;
};

/// Mean |f(x(r, s)) - (d - s)| over stratified s in [d - δ, d + δ]. The target
/// is positive in front of the observed surface, matching a field that is
/// negative inside.
SampledLoss sdf_loss(const GridSDF& field, std::span<const RaySample> samples, double delta, int per_ray, Rng& rng,
                     double weight, std::span<double> grad);

/// Mean ReLU(δ - f)^2 over stratified s in [0, d - δ]; rays with d <= δ are skipped.
SampledLoss freespace_loss(const GridSDF& field, std::span<const RaySample> samples, double delta, int per_ray,
                           Rng& rng, double weight, std::span<double> grad);

/// Mean (|grad f| - 1)^2 at uniform points of [-1,1]^3.
SampledLoss eikonal_loss(const GridSDF& field, int points, Rng& rng, double weight, std::span<double> grad);

}  // namespace touchrecon
