#pragma once

#include "touchrecon/common/grid2.hpp"
#include "touchrecon/common/types.hpp"

#include <string>

namespace touchrecon {

/// Surface gradients in the sensor frame (meters per meter).
struct GradientField {
  Grid2<double> gx, gy;
  Mask mask;
};

enum class PoissonMethod { Auto, SineTransform, CosineTransform, Sparse };

struct PoissonOptions {
  PoissonMethod method = PoissonMethod::Auto;
  double pixel_pitch = 1.0;
};

/// Least-squares integration of a masked gradient field. Each pair of
/// 4-neighbors contributes (z_q - z_p - t)^2 with t the mean of the two
/// gradients times the pitch. Pixels outside the mask are pinned to zero and
/// the zero rim is placed halfway across each mask/outside edge, so such an
/// edge targets half the masked pixel's gradient. The frame border is free.
///
/// Auto picks a sine transform when the mask is a rectangle that does not
/// touch the frame border, a cosine transform when the mask is the whole frame
/// (the free constant is set so the border mean is zero), and a sparse
/// Cholesky factorization otherwise.
Grid2<double> integrate_gradients(const GradientField& g, const PoissonOptions& options = {});

/// Which solver Auto would use for this mask.
PoissonMethod select_poisson_method(const Mask& mask);

/// Central-difference gradients of a depth map (one-sided at mask borders).
GradientField depth_gradients(const Grid2<double>& depth, const Mask& mask, double pixel_pitch);

void write_gradient_field(const std::string& dir, const GradientField& g);
GradientField read_gradient_field(const std::string& dir);

}  // namespace touchrecon
