#include "touchrecon/touchsim/observation_io.hpp"

#include "touchrecon/common/image_io.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace touchrecon {

void write_pose_txt(const std::string& path, const Pose& pose) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  const auto a = pose.to_array();
  for (int i = 0; i < 12; ++i) out << a[i] << (i % 3 == 2 ? '\n' : ' ');
}

Pose read_pose_txt(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::array<double, 12> a{};
  for (auto& v : a)
    if (!(in >> v)) throw InputError(path + ": expected 12 numbers");
  Pose p = Pose::from_array(a);
  p.validate(1e-6);
  return p;
}

void write_observation(const std::string& dir, const TactileObservation& obs) {
  fs::create_directories(dir);
  write_pfm(dir + "/depth.pfm", obs.depth);
  write_pgm_mask(dir + "/mask.pgm", obs.mask);
  write_pose_txt(dir + "/pose.txt", obs.sensor_pose);
}

TactileObservation read_observation(const std::string& dir, int touch_id) {
  TactileObservation obs;
  obs.touch_id = touch_id;
  obs.depth = read_pfm(dir + "/depth.pfm");
  obs.mask = read_pgm_mask(dir + "/mask.pgm");
  obs.sensor_pose = read_pose_txt(dir + "/pose.txt");
  if (obs.depth.width() != obs.mask.width() || obs.depth.height() != obs.mask.height())
    throw InputError(dir + ": depth and mask sizes differ");
  return obs;
}

nlohmann::json sensor_to_json(const SensorSpec& s) {
  return {{"width_px", s.width_px},           {"height_px", s.height_px},
          {"sensing_width_m", s.sensing_width}, {"sensing_height_m", s.sensing_height},
          {"press_depth_m", s.press_depth},   {"max_indentation_m", s.max_indentation},
          {"min_contact_fraction", s.min_contact_fraction}};
}

SensorSpec sensor_from_json(const nlohmann::json& j) {
  SensorSpec s;
  try {
    s.width_px = j.at("width_px").get<int>();
    s.height_px = j.at("height_px").get<int>();
    s.sensing_width = j.at("sensing_width_m").get<double>();
    s.sensing_height = j.at("sensing_height_m").get<double>();
    s.press_depth = j.at("press_depth_m").get<double>();
    s.max_indentation = j.at("max_indentation_m").get<double>();
    s.min_contact_fraction = j.at("min_contact_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("sensor description: ") + e.what());
  }
  s.validate();
  return s;
}

std::string touch_dir_name(int index) { return fmt::format("touch_{:03d}", index); }

void write_observation_set(const std::string& dir, const ObservationSet& set) {
  fs::create_directories(dir);
  nlohmann::json manifest = set.extra;
  manifest["sensor"] = sensor_to_json(set.spec);
  manifest["meters_per_unit"] = set.meters_per_unit;
  manifest["touches"] = nlohmann::json::array();
  for (std::size_t i = 0; i < set.observations.size(); ++i) {
    const auto name = touch_dir_name(static_cast<int>(i));
    write_observation(dir + "/" + name, set.observations[i]);
    manifest["touches"].push_back(name);
  }
  std::ofstream(dir + "/manifest.json") << manifest.dump(2) << '\n';
}

ObservationSet read_observation_set(const std::string& dir) {
  const auto path = dir + "/manifest.json";
  std::ifstream in(path);
  if (!in) throw InputError("no observation manifest at " + path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  ObservationSet set;
  set.spec = sensor_from_json(manifest.at("sensor"));
  set.meters_per_unit = manifest.value("meters_per_unit", 0.1);
  int id = 0;
  for (const auto& name : manifest.at("touches")) {
    auto obs = read_observation(dir + "/" + name.get<std::string>(), id++);
    obs.validate(set.spec);
    set.observations.push_back(std::move(obs));
  }
  if (set.observations.empty()) throw InputError(dir + ": observation set is empty");
  manifest.erase("sensor");
  manifest.erase("touches");
  manifest.erase("meters_per_unit");
  set.extra = manifest;
  return set;
}

}  // namespace touchrecon
