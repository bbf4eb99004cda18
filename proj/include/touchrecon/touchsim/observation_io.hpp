#pragma once

#include "touchrecon/touchsim/sensor.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace touchrecon {

// Per-touch directory: depth.pfm (meters), mask.pgm, pose.txt (12 numbers,
// row-major R then t, meters).
void write_observation(const std::string& dir, const TactileObservation& obs);
TactileObservation read_observation(const std::string& dir, int touch_id);

void write_pose_txt(const std::string& path, const Pose& pose);
Pose read_pose_txt(const std::string& path);

nlohmann::json sensor_to_json(const SensorSpec& spec);
SensorSpec sensor_from_json(const nlohmann::json& j);

/// Observation set: a directory holding manifest.json and one touch_NNN
/// subdirectory per observation.
struct ObservationSet {
  SensorSpec spec;
  double meters_per_unit = 0.1;  // metric size of one domain unit
  std::vector<TactileObservation> observations;
  nlohmann::json extra = nlohmann::json::object();  // provenance fields
};

std::string touch_dir_name(int index);
void write_observation_set(const std::string& dir, const ObservationSet& set);
ObservationSet read_observation_set(const std::string& dir);

}  // namespace touchrecon
