#pragma once

#include "touchrecon/field/grid_sdf.hpp"
#include "touchrecon/losses/sds.hpp"
#include "touchrecon/losses/weights.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace touchrecon {

struct Stage1Config {
  int warmup_steps = 1000;
  int total_steps = 7000;
  int ray_batch = 16384;
  int samples_per_ray = 512;
  int sds_resolution = 64;
  int sds_batch = 8;
  bool alternate_sds = false;  // SDS and tactile updates on alternating steps
  double learning_rate = 1e-2;
  double lr_final_factor = 1.0;  // exponential decay to lr * factor at total_steps
  std::vector<int> levels{16, 32, 64, 128};
  UnlockSchedule unlock{1000, 400, 0};
  int bounds_resolution = 16;
  // Sparse eikonal batches let Adam random-walk cells no other term reaches.
  int eikonal_points = 8192;  // 0: ray_batch / 4
  double init_radius = 0.5;
  LossWeights weights;
};

struct Stage2Config {
  int steps = 2000;
  int tet_resolution = 128;
  double iso = -0.03;
  int sds_resolution = 512;
  int sds_batch = 4;
  int observation_batch = 32;  // capped by the touch count
  int rays_per_touch = 1024;
  double learning_rate = 1e-3;
  LossWeights weights;
};

struct PipelineConfig {
  std::string profile;  // simulation | real | desk
  std::uint64_t seed = 0;
  Stage1Config stage1;
  Stage2Config stage2;
  SdsOptions sds;
  double view_radius = 2.2;
  double view_fov_deg = 45.0;
  int max_guidance_failures = 64;

  void validate() const;  // throws InputError
};

/// Defaults for a named profile; throws InputError for unknown names.
PipelineConfig profile_defaults(const std::string& profile);

/// Flat `key = value` text, `#` comments. `profile` is required and selects
/// the defaults the other keys override. Unknown keys are errors.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// Sets one key on an existing config (flag overrides).
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& config, const std::string& key);
const std::vector<std::string>& config_keys();

/// Every key, one per line, in config_keys() order.
std::string config_to_text(const PipelineConfig& config);

/// observation_batch capped by the number of touches.
int observation_batch(const PipelineConfig& config, std::size_t touch_count);

}  // namespace touchrecon
