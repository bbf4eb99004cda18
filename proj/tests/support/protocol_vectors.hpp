#pragma once

#include "touchrecon/common/types.hpp"
#include "touchrecon/guidance/protocol.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace touchrecon::test {

// Shared on-disk protocol vectors: vectors.json lists valid frames with their
// decoded fields and invalid frames that must be rejected.
inline std::string vector_path(const std::string& name) { return std::string(TOUCHRECON_VECTOR_DIR) + "/" + name; }

inline nlohmann::json vector_manifest() {
  std::ifstream in(vector_path("vectors.json"));
  if (!in) throw Error("cannot open " + vector_path("vectors.json"));
  return nlohmann::json::parse(in);
}

inline Message message_from_json(const std::string& type, const nlohmann::json& f) {
  if (type == "hello") return HelloMessage{f.at("agent").get<std::string>()};
  if (type == "error")
    return ErrorMessage{f.at("request_id").get<std::uint64_t>(), f.at("code").get<std::uint32_t>(),
                        f.at("message").get<std::string>()};
  if (type == "gradient") {
    GuidanceGradient g;
    g.request_id = f.at("request_id");
    g.status = f.at("status");
    g.batch = f.at("batch");
    g.height = f.at("height");
    g.width = f.at("width");
    g.gradients = f.at("gradients").get<std::vector<float>>();
    return g;
  }
  GuidanceRequest q;
  q.request_id = f.at("request_id");
  q.prompt = f.at("prompt");
  q.batch = f.at("batch");
  q.height = f.at("height");
  q.width = f.at("width");
  q.t_min = f.at("t_min");
  q.t_max = f.at("t_max");
  q.seed = f.at("seed");
  q.guidance_scale = f.at("guidance_scale").get<float>();
  q.images = f.at("images").get<std::vector<float>>();
  for (const auto& c : f.value("cameras", nlohmann::json::array())) {
    CameraExtension e;
    for (int i = 0; i < 9; ++i) e.rotation(i / 3, i % 3) = c.at("rotation")[i];
    for (int i = 0; i < 3; ++i) e.translation[i] = c.at("translation")[i];
    e.fov_y_deg = c.at("fov_y_deg");
    q.cameras.push_back(e);
  }
  for (const auto& e : f.value("extensions", nlohmann::json::array())) {
    std::vector<std::byte> b;
    for (int v : e.at("bytes")) b.push_back(static_cast<std::byte>(v));
    q.unknown_extensions.emplace_back(e.at("tag").get<std::uint32_t>(), b);
  }
  return q;
}

}  // namespace touchrecon::test
