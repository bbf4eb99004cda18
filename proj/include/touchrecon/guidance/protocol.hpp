#pragma once

#include "touchrecon/common/binary_io.hpp"
#include "touchrecon/common/grid2.hpp"
#include "touchrecon/render/camera.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace touchrecon {

// Frame header: "TGDP", u32 version, u32 type, u64 payload length, all
// little-endian, followed by the payload.
inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 20;
inline constexpr std::uint64_t kMaxPayloadSize = 1ULL << 31;

enum class MessageType : std::uint32_t { Request = 1, Gradient = 2, Error = 3, Hello = 4 };

class GuidanceError : public Error {
 public:
  using Error::Error;
};
/// Malformed or unexpected traffic; never retried.
class ProtocolError : public GuidanceError {
 public:
  using GuidanceError::GuidanceError;
};
/// Refused connection, closed stream or timeout; the request may be retried.
class ConnectionError : public GuidanceError {
 public:
  using GuidanceError::GuidanceError;
};
/// A type-3 message from the backend.
class RemoteError : public GuidanceError {
 public:
  RemoteError(std::uint32_t code, const std::string& message)
      : GuidanceError("guidance backend error " + std::to_string(code) + ": " + message), code_(code) {}
  std::uint32_t code() const { return code_; }

 private:
  std::uint32_t code_;
};

/// Camera metadata carried in the request extension block (tag 1), one per
/// image: rotation row-major, translation, vertical field of view in degrees.
struct CameraExtension {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double fov_y_deg = 45.0;

  static CameraExtension from(const ViewCamera& cam);
  ViewCamera camera(int width, int height) const;
  bool operator==(const CameraExtension&) const = default;
};

inline constexpr std::uint32_t kExtensionCamera = 1;

struct GuidanceRequest {
  std::uint64_t request_id = 0;
  std::string prompt;
  std::uint32_t batch = 1, height = 0, width = 0;
  std::uint32_t t_min = 20, t_max = 980;
  std::uint64_t seed = 0;
  float guidance_scale = 100.0f;
  std::vector<float> images;  // batch x height x width x 3
  std::vector<CameraExtension> cameras;  // empty or one per image
  std::vector<std::pair<std::uint32_t, std::vector<std::byte>>> unknown_extensions;

  std::size_t image_floats() const { return static_cast<std::size_t>(batch) * height * width * 3; }
  void validate() const;
  bool operator==(const GuidanceRequest&) const = default;
};

struct GuidanceGradient {
  std::uint64_t request_id = 0;
  std::uint32_t status = 0;
  std::uint32_t batch = 1, height = 0, width = 0;
  std::vector<float> gradients;

  std::size_t image_floats() const { return static_cast<std::size_t>(batch) * height * width * 3; }
  void validate() const;
  bool operator==(const GuidanceGradient&) const = default;
};

struct ErrorMessage {
  std::uint64_t request_id = 0;
  std::uint32_t code = 0;
  std::string message;
  bool operator==(const ErrorMessage&) const = default;
};

struct HelloMessage {
  std::string agent;
  bool operator==(const HelloMessage&) const = default;
};

using Message = std::variant<GuidanceRequest, GuidanceGradient, ErrorMessage, HelloMessage>;

struct Frame {
  std::uint32_t version = kProtocolVersion;
  MessageType type = MessageType::Hello;
  std::vector<std::byte> payload;
};

MessageType message_type(const Message& m);
std::vector<std::byte> encode_payload(const Message& m);
Message decode_payload(MessageType type, std::span<const std::byte> payload);

std::vector<std::byte> encode_frame(const Message& m, std::uint32_t version = kProtocolVersion);
/// Decodes exactly one frame occupying all of `bytes`.
Message decode_message(std::span<const std::byte> bytes);

/// Incremental frame splitter for byte streams delivered in arbitrary pieces.
class FrameDecoder {
 public:
  void feed(std::span<const std::byte> bytes);
  /// Next complete frame, if any. Throws ProtocolError on a bad magic, unknown
  /// type or oversized length.
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::byte> buf_;
  std::size_t pos_ = 0;
};

/// Image rows map to grid rows; components are stored x, y, z.
void append_image(std::vector<float>& out, const Grid2<Vec3>& image);
Grid2<Vec3> image_from_floats(std::span<const float> data, std::size_t index, int height, int width);

}  // namespace touchrecon
