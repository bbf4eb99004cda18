#pragma once

#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/touchsim/sensor.hpp"

#include <vector>

namespace touchrecon {

struct PlannerOptions {
  double oversample_factor = 3.0;
  double poisson_radius = 0.0;   // 0: derived from surface area
  double retract_factor = 1.5;   // retract distance in units of the bounding radius
  int normal_patch = 5;          // side of the central pixel patch used for alignment
};

class PlannerError : public Error {
 public:
  PlannerError(const std::string& what, std::size_t achieved) : Error(what), achieved_(achieved) {}
  std::size_t achieved() const { return achieved_; }

 private:
  std::size_t achieved_;
};

struct PlannedTouch {
  Pose pose;
  TactileObservation observation;
};

/// Plans k pressed sensor poses over the mesh (metric units) and renders each
/// contact. Throws PlannerError when the candidate pool runs out.
std::vector<PlannedTouch> plan_and_render(const RayCaster& caster, int k, const SensorSpec& spec, std::uint64_t seed,
                                          const PlannerOptions& options = {});

std::vector<Pose> plan_touches(const TriangleMesh& mesh, int k, const SensorSpec& spec, std::uint64_t seed,
                               const PlannerOptions& options = {});

}  // namespace touchrecon
