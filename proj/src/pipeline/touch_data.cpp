#include "touchrecon/pipeline/touch_data.hpp"

namespace touchrecon {

RaySample to_domain(const RaySample& s, double meters_per_unit) {
  RaySample out = s;
  const double k = 1.0 / meters_per_unit;
  out.ray.origin = s.ray.origin * k;
  out.ray.t_min = s.ray.t_min * k;
  out.ray.t_max = s.ray.t_max * k;
  out.d = s.d * k;
  return out;
}

void add_touch(TouchData& data, const VirtualObservation& vobs, const Pose& sensor_pose) {
  Pose p = sensor_pose;
  p.translation /= data.meters_per_unit;
  data.sensor_poses.push_back(p);
  for (const auto& s : observation_rays(vobs, sensor_pose)) data.rays.push_back(to_domain(s, data.meters_per_unit));
  data.offsets.push_back(data.rays.size());
}

TouchData prepare_touch_data(const ObservationSet& set, double standoff) {
  if (set.observations.empty()) throw InputError("observation set holds no touches");
  if (!(set.meters_per_unit > 0.0)) throw InputError("meters_per_unit must be positive");
  TouchData data;
  data.meters_per_unit = set.meters_per_unit;
  for (const auto& obs : set.observations)
    add_touch(data, to_virtual_observation(obs, set.spec, standoff), obs.sensor_pose);
  if (data.rays.empty()) throw InputError("observation set yields no supervised rays");
  return data;
}

std::vector<RaySample> sample_ray_batch(const TouchData& data, int count, Rng& rng) {
  if (data.rays.empty()) throw InputError("no rays to sample");
  std::vector<RaySample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(data.rays[rng.index(data.rays.size())]);
  return out;
}

}  // namespace touchrecon
