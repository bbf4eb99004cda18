#pragma once

#include "touchrecon/field/grid_sdf.hpp"
#include "touchrecon/guidance/backend.hpp"
#include "touchrecon/pipeline/adam.hpp"
#include "touchrecon/pipeline/config.hpp"
#include "touchrecon/pipeline/touch_data.hpp"

#include <json.hpp>

#include <functional>
#include <string>

namespace touchrecon {

using ReportSink = std::function<void(const nlohmann::json&)>;

struct Stage1State {
  GridSDF field;
  Adam adam;
  int step = 0;  // next step to run
  std::uint64_t next_request_id = 1;
  std::uint64_t sds_requests = 0;
  std::uint64_t sds_failures = 0;
  double tactile_average = 0.0;  // exponential average of depth + normal loss

  bool operator==(const Stage1State& o) const {
    return field.params() == o.field.params() && field.active_levels() == o.field.active_levels() && adam == o.adam &&
           step == o.step && next_request_id == o.next_request_id && sds_requests == o.sds_requests &&
           sds_failures == o.sds_failures && tactile_average == o.tactile_average;
  }
};

struct TrainControl {
  int stop_at = -1;  // stop before this step; -1 runs to the end
  ReportSink report;
  std::string checkpoint_path;  // written every checkpoint_every steps and on abort
  int checkpoint_every = 0;
};

/// Guidance failed more often than the config allows. A checkpoint of the
/// state before the failing step was written when a path was configured.
class GuidanceAbort : public Error {
 public:
  GuidanceAbort(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Field initialized to a sphere of the configured radius, nothing trained.
Stage1State stage1_init(const PipelineConfig& config);

double stage1_learning_rate(const Stage1Config& config, int step);
/// The guidance term is a mean over rendered pixels, like the tactile terms
/// over rays: `weight` divided by the pixel count of all views.
double sds_pixel_weight(double weight, std::span<const ViewCamera> views);
/// Whether guidance views are rendered at `step`.
bool stage1_sds_active(const Stage1Config& config, int step);
/// Whether tactile losses are applied at `step`.
bool stage1_tactile_active(const Stage1Config& config, int step);
/// Guidance requests issued by steps [0, steps).
std::uint64_t stage1_expected_requests(const Stage1Config& config, int steps);

/// Runs steps state.step .. total_steps (or stop_at). Before warmup_steps only
/// tactile losses and the Eikonal term are applied; after, sds_batch guidance
/// views per step are added.
void stage1_train(const PipelineConfig& config, const TouchData& touches, GuidanceBackend& backend, Stage1State& state,
                  const TrainControl& control = {});

/// Zero level set of the field through a tet lattice at the given iso.
TriangleMesh extract_field_mesh(const GridSDF& field, int resolution, double iso);

}  // namespace touchrecon
