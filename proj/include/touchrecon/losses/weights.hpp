#pragma once

namespace touchrecon {

/// Linear ramp from `start` to `end` over `steps` steps, then constant.
struct Ramp {
  double start = 0.0;
  double end = 0.0;
  int steps = 0;

  double at(int step) const;
};

struct LossWeights {
  double depth = 1.0;
  Ramp normal{0.025, 1.0, 6000};
  double sdf = 1.0;
  double freespace = 1.0;
  double eikonal = 0.01;
  double sds = 1.0;
  double normal_consistency = 0.1;
  double delta = 0.05;  // truncation distance, domain units
  int band_samples = 8;
  int freespace_samples = 8;

  void validate() const;  // throws InputError
};

}  // namespace touchrecon
