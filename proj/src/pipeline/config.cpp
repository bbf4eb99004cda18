#include "touchrecon/pipeline/config.hpp"
#include "touchrecon/common/types.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace touchrecon {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InputError("config key '" + key + "': expected a number, got '" + v + "'");
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InputError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<int>(key, trim(item)));
  if (out.empty()) throw InputError("config key '" + key + "': empty list");
  return out;
}

struct Entry {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define TR_INT(path)                                                                                        \
  Entry {                                                                                                   \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.path = parse_integer<int>(k, v); }, \
        [](const PipelineConfig& c) { return std::to_string(c.path); }                                       \
  }
#define TR_DOUBLE(path)                                                                               \
  Entry {                                                                                             \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.path = parse_double(k, v); }, \
        [](const PipelineConfig& c) { return format_double(c.path); }                                  \
  }

const std::vector<std::pair<std::string, Entry>>& table() {
  static const std::vector<std::pair<std::string, Entry>> t = {
      {"profile", {[](PipelineConfig& c, const std::string&, const std::string& v) { c.profile = v; },
                   [](const PipelineConfig& c) { return c.profile; }}},
      {"seed", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                  c.seed = parse_integer<std::uint64_t>(k, v);
                },
                [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
      {"prompt", {[](PipelineConfig& c, const std::string&, const std::string& v) { c.sds.prompt = v; },
                  [](const PipelineConfig& c) { return c.sds.prompt; }}},
      {"guidance.t_min", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                            c.sds.t_min = parse_integer<std::uint32_t>(k, v);
                          },
                          [](const PipelineConfig& c) { return std::to_string(c.sds.t_min); }}},
      {"guidance.t_max", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                            c.sds.t_max = parse_integer<std::uint32_t>(k, v);
                          },
                          [](const PipelineConfig& c) { return std::to_string(c.sds.t_max); }}},
      {"guidance.scale", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                            c.sds.guidance_scale = static_cast<float>(parse_double(k, v));
                          },
                          [](const PipelineConfig& c) { return format_double(c.sds.guidance_scale); }}},
      {"guidance.send_cameras", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                                   c.sds.send_cameras = parse_bool(k, v);
                                 },
                                 [](const PipelineConfig& c) { return std::string(c.sds.send_cameras ? "true" : "false"); }}},
      {"guidance.max_failures", TR_INT(max_guidance_failures)},
      {"view.radius", TR_DOUBLE(view_radius)},
      {"view.fov_deg", TR_DOUBLE(view_fov_deg)},

      {"stage1.warmup_steps", TR_INT(stage1.warmup_steps)},
      {"stage1.total_steps", TR_INT(stage1.total_steps)},
      {"stage1.ray_batch", TR_INT(stage1.ray_batch)},
      {"stage1.samples_per_ray", TR_INT(stage1.samples_per_ray)},
      {"stage1.sds_resolution", TR_INT(stage1.sds_resolution)},
      {"stage1.sds_batch", TR_INT(stage1.sds_batch)},
      {"stage1.sds_mode", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                             if (v != "joint" && v != "alternate")
                               throw InputError("config key '" + k + "': expected joint or alternate, got '" + v + "'");
                             c.stage1.alternate_sds = v == "alternate";
                           },
                           [](const PipelineConfig& c) {
                             return std::string(c.stage1.alternate_sds ? "alternate" : "joint");
                           }}},
      {"stage1.learning_rate", TR_DOUBLE(stage1.learning_rate)},
      {"stage1.lr_final_factor", TR_DOUBLE(stage1.lr_final_factor)},
      {"stage1.levels", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           c.stage1.levels = parse_int_list(k, v);
                         },
                         [](const PipelineConfig& c) {
                           std::string s;
                           for (std::size_t i = 0; i < c.stage1.levels.size(); ++i)
                             s += (i ? "," : "") + std::to_string(c.stage1.levels[i]);
                           return s;
                         }}},
      {"stage1.unlock_start", TR_INT(stage1.unlock.start_step)},
      {"stage1.unlock_every", TR_INT(stage1.unlock.every)},
      {"stage1.initial_levels", TR_INT(stage1.unlock.initial_active)},
      {"stage1.bounds_resolution", TR_INT(stage1.bounds_resolution)},
      {"stage1.eikonal_points", TR_INT(stage1.eikonal_points)},
      {"stage1.init_radius", TR_DOUBLE(stage1.init_radius)},
      {"stage1.w_depth", TR_DOUBLE(stage1.weights.depth)},
      {"stage1.w_normal_start", TR_DOUBLE(stage1.weights.normal.start)},
      {"stage1.w_normal_end", TR_DOUBLE(stage1.weights.normal.end)},
      {"stage1.w_normal_steps", TR_INT(stage1.weights.normal.steps)},
      {"stage1.w_sdf", TR_DOUBLE(stage1.weights.sdf)},
      {"stage1.w_freespace", TR_DOUBLE(stage1.weights.freespace)},
      {"stage1.w_eikonal", TR_DOUBLE(stage1.weights.eikonal)},
      {"stage1.w_sds", TR_DOUBLE(stage1.weights.sds)},
      {"stage1.delta", TR_DOUBLE(stage1.weights.delta)},
      {"stage1.band_samples", TR_INT(stage1.weights.band_samples)},
      {"stage1.freespace_samples", TR_INT(stage1.weights.freespace_samples)},

      {"stage2.steps", TR_INT(stage2.steps)},
      {"stage2.tet_resolution", TR_INT(stage2.tet_resolution)},
      {"stage2.iso", TR_DOUBLE(stage2.iso)},
      {"stage2.sds_resolution", TR_INT(stage2.sds_resolution)},
      {"stage2.sds_batch", TR_INT(stage2.sds_batch)},
      {"stage2.observation_batch", TR_INT(stage2.observation_batch)},
      {"stage2.rays_per_touch", TR_INT(stage2.rays_per_touch)},
      {"stage2.learning_rate", TR_DOUBLE(stage2.learning_rate)},
      {"stage2.w_depth", TR_DOUBLE(stage2.weights.depth)},
      {"stage2.w_normal", {[](PipelineConfig& c, const std::string& k, const std::string& v) {
                             const double w = parse_double(k, v);
                             c.stage2.weights.normal = Ramp{w, w, 0};
                           },
                           [](const PipelineConfig& c) { return format_double(c.stage2.weights.normal.end); }}},
      {"stage2.w_sds", TR_DOUBLE(stage2.weights.sds)},
      {"stage2.w_normal_consistency", TR_DOUBLE(stage2.weights.normal_consistency)},
  };
  return t;
}

#undef TR_INT
#undef TR_DOUBLE

const Entry& find_entry(const std::string& key) {
  for (const auto& [name, e] : table())
    if (name == key) return e;
  throw InputError("unknown config key '" + key + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  const auto& s1 = stage1;
  if (s1.warmup_steps < 0 || s1.total_steps < 0) throw InputError("stage1 step counts must be non-negative");
  if (s1.warmup_steps > s1.total_steps) throw InputError("stage1.warmup_steps must not exceed stage1.total_steps");
  if (s1.ray_batch < 1 || s1.sds_batch < 1 || s1.samples_per_ray < 2)
    throw InputError("stage1 batches must be at least 1");
  if (s1.sds_resolution < 1) throw InputError("stage1.sds_resolution must be positive");
  if (s1.levels.empty() || s1.levels.size() > static_cast<std::size_t>(kMaxFieldLevels))
    throw InputError("stage1.levels must list 1 to 8 resolutions");
  for (int r : s1.levels)
    if (r < 1) throw InputError("stage1.levels entries must be positive");
  if (!(s1.learning_rate > 0.0) || !(s1.lr_final_factor > 0.0))
    throw InputError("stage1 learning rate settings must be positive");
  if (s1.bounds_resolution < 1) throw InputError("stage1.bounds_resolution must be positive");
  if (s1.eikonal_points < 0) throw InputError("stage1.eikonal_points must be non-negative");
  s1.weights.validate();

  const auto& s2 = stage2;
  if (s2.steps < 0) throw InputError("stage2.steps must be non-negative");
  if (s2.tet_resolution < 2) throw InputError("stage2.tet_resolution must be at least 2");
  if (s2.sds_batch < 1 || s2.observation_batch < 1 || s2.rays_per_touch < 1)
    throw InputError("stage2 batches must be at least 1");
  if (s2.sds_resolution < 1) throw InputError("stage2.sds_resolution must be positive");
  if (!(s2.learning_rate > 0.0)) throw InputError("stage2.learning_rate must be positive");
  s2.weights.validate();

  sds.validate();
  if (!(view_radius > 0.0) || !(view_fov_deg > 0.0 && view_fov_deg < 180.0))
    throw InputError("view settings out of range");
  if (max_guidance_failures < 0) throw InputError("guidance.max_failures must be non-negative");
}

PipelineConfig profile_defaults(const std::string& profile) {
  PipelineConfig c;
  c.profile = profile;
  c.stage1.weights.freespace = 10.0;
  c.stage2.weights.normal = Ramp{1.0, 1.0, 0};
  if (profile == "simulation") return c;
  if (profile == "real") {
    c.stage1.weights.normal = Ramp{0.1, 4.0, 6000};
    c.stage2.weights.normal = Ramp{4.0, 4.0, 0};
    c.stage2.iso = 0.0;
    return c;
  }
  if (profile == "desk") {
    c.stage1.ray_batch = 2048;
    c.stage1.total_steps = 1500;
    c.stage1.levels = {16, 32, 64};
    c.stage1.lr_final_factor = 0.1;
    c.stage1.learning_rate = 3e-3;
    c.stage1.weights.sds = 0.01;
    c.stage2.tet_resolution = 64;
    c.stage2.steps = 200;
    c.stage2.rays_per_touch = 256;
    return c;
  }
  throw InputError("unknown profile '" + profile + "' (expected simulation, real or desk)");
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
  find_entry(key).set(config, key, value);
}

std::string get_config_value(const PipelineConfig& config, const std::string& key) {
  return find_entry(key).get(config);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, e] : table()) k.push_back(name);
    return k;
  }();
  return keys;
}

PipelineConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> items;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    if (value.empty() && key != "prompt") throw InputError("config key '" + key + "' has no value");
    find_entry(key);
    if (seen[key]++) throw InputError("config key '" + key + "' given twice");
    items.emplace_back(std::move(key), std::move(value));
  }
  const auto profile = std::find_if(items.begin(), items.end(), [](const auto& kv) { return kv.first == "profile"; });
  if (profile == items.end()) throw InputError("missing config key 'profile'");
  PipelineConfig config = profile_defaults(profile->second);
  for (const auto& [key, value] : items) set_config_value(config, key, value);
  config.validate();
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_text(const PipelineConfig& config) {
  std::string out;
  for (const auto& [name, e] : table()) out += name + " = " + e.get(config) + "\n";
  return out;
}

int observation_batch(const PipelineConfig& config, std::size_t touch_count) {
  return static_cast<int>(std::min<std::size_t>(config.stage2.observation_batch, touch_count));
}

}  // namespace touchrecon
