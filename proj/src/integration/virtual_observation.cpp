#include "touchrecon/integration/virtual_observation.hpp"

#include "touchrecon/common/image_io.hpp"
#include "touchrecon/integration/mask.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace touchrecon {

VirtualObservation to_virtual_observation(const TactileObservation& obs, const SensorSpec& spec, double standoff) {
  if (!(standoff > 0.0)) throw InputError("virtual camera standoff must be positive");
  const int w = obs.depth.width(), h = obs.depth.height();
  if (w < 3 || h < 3) throw InputError("observation is too small for central differences");
  VirtualObservation v;
  v.camera_pose.translation = Vec3(0.0, 0.0, -standoff);
  v.standoff = standoff;
  v.pixel_pitch = spec.pixel_pitch();
  v.touch_id = obs.touch_id;
  v.mask = erode_mask(obs.mask);
  if (count_true(v.mask) == 0) throw InputError("contact mask is too small for central differences (needs 3x3)");
  v.depth = Grid2<double>(w, h, 0.0);
  v.normals = Grid2<Vec3>(w, h, Vec3(0.0, 0.0, 1.0));
  for (std::size_t i = 0; i < obs.depth.size(); ++i)
    if (obs.mask[i]) v.depth[i] = standoff - obs.depth[i];
  const double inv2p = 1.0 / (2.0 * v.pixel_pitch);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!v.mask(r, c)) continue;
      const double dzdx = (v.depth(r, c + 1) - v.depth(r, c - 1)) * inv2p;
      const double dzdy = (v.depth(r + 1, c) - v.depth(r - 1, c)) * inv2p;
      v.normals(r, c) = Vec3(dzdx, dzdy, -1.0).normalized();
    }
  return v;
}

std::vector<RaySample> observation_rays(const VirtualObservation& vobs, const Pose& world_pose) {
  const Pose cam = world_pose * vobs.camera_pose;
  const Vec3 dir = cam.z_axis();
  std::vector<RaySample> out;
  out.reserve(count_true(vobs.mask));
  for (int r = 0; r < vobs.mask.height(); ++r)
    for (int c = 0; c < vobs.mask.width(); ++c) {
      if (!vobs.mask(r, c)) continue;
      const Vec2 p = vobs.pixel_center(r, c);
      RaySample s;
      s.ray.origin = cam.apply(Vec3(p.x(), p.y(), 0.0));
      s.ray.direction = dir;
      s.d = vobs.depth(r, c);
      s.n = cam.rotate(vobs.normals(r, c));
      s.touch_id = vobs.touch_id;
      out.push_back(s);
    }
  return out;
}

void write_virtual_observation(const std::string& dir, const VirtualObservation& v) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["standoff_m"] = v.standoff;
  j["pixel_pitch_m"] = v.pixel_pitch;
  const auto a = v.camera_pose.to_array();
  j["pose"] = std::vector<double>(a.begin(), a.end());
  j["width_px"] = v.depth.width();
  j["height_px"] = v.depth.height();
  j["touch_id"] = v.touch_id;
  std::ofstream(dir + "/virtual.json") << j.dump(2) << '\n';
  write_pfm(dir + "/virtual_depth.pfm", v.depth);
  write_pfm_rgb(dir + "/virtual_normals.pfm", v.normals);
  write_pgm_mask(dir + "/virtual_mask.pgm", v.mask);
}

VirtualObservation read_virtual_observation(const std::string& dir) {
  std::ifstream in(dir + "/virtual.json");
  if (!in) throw InputError("no virtual.json in " + dir);
  VirtualObservation v;
  try {
    nlohmann::json j;
    in >> j;
    v.standoff = j.at("standoff_m").get<double>();
    v.pixel_pitch = j.at("pixel_pitch_m").get<double>();
    const auto p = j.at("pose").get<std::vector<double>>();
    if (p.size() != 12) throw InputError("virtual.json: pose needs 12 numbers");
    std::array<double, 12> a{};
    std::copy(p.begin(), p.end(), a.begin());
    v.camera_pose = Pose::from_array(a);
    v.touch_id = j.value("touch_id", 0);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(dir + "/virtual.json: " + e.what());
  }
  v.depth = read_pfm(dir + "/virtual_depth.pfm");
  v.normals = read_pfm_rgb(dir + "/virtual_normals.pfm");
  v.mask = read_pgm_mask(dir + "/virtual_mask.pgm");
  return v;
}

}  // namespace touchrecon
