#pragma once

#include "touchrecon/pipeline/stage2.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace touchrecon {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Training state of one stage plus the config it ran under.
struct Checkpoint {
  std::uint32_t stage = 1;  // 1 or 2
  std::string config_text;
  Stage1State stage1;       // valid when stage == 1
  Stage2State stage2;       // valid when stage == 2
};

// Layout: "TRCK", u32 version, u64 payload size, payload, u64 FNV-1a of the
// payload.
std::vector<std::byte> encode_checkpoint(const Checkpoint& c);
/// Throws InputError on bad magic, version mismatch, checksum failure or
/// malformed content.
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);

/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace touchrecon
