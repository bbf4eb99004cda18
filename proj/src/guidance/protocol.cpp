#include "touchrecon/guidance/protocol.hpp"

#include <cmath>
#include <cstring>

namespace touchrecon {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'D', 'P'};

void write_floats(ByteWriter& w, std::span<const float> v) {
  for (float f : v) w.f32(f);
}

std::vector<float> read_floats(ByteReader& r, std::size_t n) {
  if (n > r.remaining() / 4) throw ProtocolError("image payload shorter than its declared shape");
  std::vector<float> v(n);
  for (auto& f : v) f = r.f32();
  return v;
}

bool all_finite(std::span<const float> v) {
  for (float f : v)
    if (!std::isfinite(f)) return false;
  return true;
}

std::size_t shape_floats(std::uint32_t b, std::uint32_t h, std::uint32_t w) {
  const unsigned __int128 n = static_cast<unsigned __int128>(b) * h * w * 3;
  if (n > kMaxPayloadSize / 4) throw ProtocolError("image shape exceeds the payload limit");
  return static_cast<std::size_t>(n);
}

void encode_request(ByteWriter& w, const GuidanceRequest& q) {
  w.u64(q.request_id);
  w.string(q.prompt);
  w.u32(q.batch);
  w.u32(q.height);
  w.u32(q.width);
  w.u32(q.t_min);
  w.u32(q.t_max);
  w.u64(q.seed);
  w.f32(q.guidance_scale);
  write_floats(w, q.images);
  // Extension block: u32 count, then (u32 tag, u64 length, bytes) entries.
  w.u32(static_cast<std::uint32_t>((q.cameras.empty() ? 0 : 1) + q.unknown_extensions.size()));
  if (!q.cameras.empty()) {
    ByteWriter e;
    for (const auto& c : q.cameras) {
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) e.f64(c.rotation(r, k));
      for (int k = 0; k < 3; ++k) e.f64(c.translation[k]);
      e.f64(c.fov_y_deg);
    }
    w.u32(kExtensionCamera);
    w.u64(e.size());
    w.bytes(e.buffer());
  }
  for (const auto& [tag, data] : q.unknown_extensions) {
    w.u32(tag);
    w.u64(data.size());
    w.bytes(data);
  }
}

GuidanceRequest decode_request(ByteReader& r) {
  GuidanceRequest q;
  q.request_id = r.u64();
  q.prompt = r.string();
  q.batch = r.u32();
  q.height = r.u32();
  q.width = r.u32();
  q.t_min = r.u32();
  q.t_max = r.u32();
  q.seed = r.u64();
  q.guidance_scale = r.f32();
  q.images = read_floats(r, shape_floats(q.batch, q.height, q.width));
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t tag = r.u32();
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw ProtocolError("extension longer than the payload");
    auto data = r.bytes(static_cast<std::size_t>(len));
    if (tag == kExtensionCamera) {
      constexpr std::size_t kCameraBytes = 13 * 8;
      if (len != kCameraBytes * q.batch) throw ProtocolError("camera extension does not hold one camera per image");
      ByteReader e(data);
      q.cameras.resize(q.batch);
      for (auto& c : q.cameras) {
        for (int a = 0; a < 3; ++a)
          for (int k = 0; k < 3; ++k) c.rotation(a, k) = e.f64();
        for (int k = 0; k < 3; ++k) c.translation[k] = e.f64();
        c.fov_y_deg = e.f64();
      }
    } else {
      q.unknown_extensions.emplace_back(tag, std::vector<std::byte>(data.begin(), data.end()));
    }
  }
  return q;
}

}  // namespace

CameraExtension CameraExtension::from(const ViewCamera& cam) {
  return {cam.pose.rotation, cam.pose.translation, cam.fov_y_deg};
}

ViewCamera CameraExtension::camera(int width, int height) const {
  ViewCamera cam;
  cam.pose.rotation = rotation;
  cam.pose.translation = translation;
  cam.fov_y_deg = fov_y_deg;
  cam.width = width;
  cam.height = height;
  return cam;
}

void GuidanceRequest::validate() const {
  if (batch < 1 || height < 1 || width < 1) throw ProtocolError("request shape must be positive");
  if (images.size() != image_floats()) throw ProtocolError("request image size does not match its shape");
  if (!all_finite(images)) throw ProtocolError("request images contain non-finite values");
  if (t_min > t_max) throw ProtocolError("request t_min exceeds t_max");
  if (!cameras.empty() && cameras.size() != batch) throw ProtocolError("request needs one camera per image");
}

void GuidanceGradient::validate() const {
  if (gradients.size() != image_floats()) throw ProtocolError("gradient size does not match its shape");
  if (!all_finite(gradients)) throw ProtocolError("gradient contains non-finite values");
}

MessageType message_type(const Message& m) {
  return static_cast<MessageType>(m.index() + 1);
}

std::vector<std::byte> encode_payload(const Message& m) {
  ByteWriter w;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GuidanceRequest>) {
          encode_request(w, v);
        } else if constexpr (std::is_same_v<T, GuidanceGradient>) {
          w.u64(v.request_id);
          w.u32(v.status);
          w.u32(v.batch);
          w.u32(v.height);
          w.u32(v.width);
          write_floats(w, v.gradients);
        } else if constexpr (std::is_same_v<T, ErrorMessage>) {
          w.u64(v.request_id);
          w.u32(v.code);
          w.string(v.message);
        } else {
          w.string(v.agent);
        }
      },
      m);
  return w.take();
}

Message decode_payload(MessageType type, std::span<const std::byte> payload) {
  ByteReader r(payload);
  Message out;
  try {
    switch (type) {
      case MessageType::Request:
        out = decode_request(r);
        break;
      case MessageType::Gradient: {
        GuidanceGradient g;
        g.request_id = r.u64();
        g.status = r.u32();
        g.batch = r.u32();
        g.height = r.u32();
        g.width = r.u32();
        g.gradients = read_floats(r, shape_floats(g.batch, g.height, g.width));
        out = std::move(g);
        break;
      }
      case MessageType::Error: {
        ErrorMessage e;
        e.request_id = r.u64();
        e.code = r.u32();
        e.message = r.string();
        out = std::move(e);
        break;
      }
      case MessageType::Hello:
        out = HelloMessage{r.string()};
        break;
      default:
        throw ProtocolError("unknown message type " + std::to_string(static_cast<std::uint32_t>(type)));
    }
  } catch (const ProtocolError&) {
    throw;
  } catch (const InputError& e) {
    throw ProtocolError(std::string("malformed payload: ") + e.what());
  }
  if (!r.done()) throw ProtocolError("payload has trailing bytes");
  return out;
}

std::vector<std::byte> encode_frame(const Message& m, std::uint32_t version) {
  const auto payload = encode_payload(m);
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(message_type(m)));
  w.u64(payload.size());
  w.bytes(payload);
  return w.take();
}

Message decode_message(std::span<const std::byte> bytes) {
  FrameDecoder d;
  d.feed(bytes);
  auto f = d.next();
  if (!f) throw ProtocolError("incomplete frame");
  if (d.buffered() != 0) throw ProtocolError("bytes after the frame");
  if (f->version != kProtocolVersion)
    throw ProtocolError("protocol version " + std::to_string(f->version) + " is not supported (expected " +
                        std::to_string(kProtocolVersion) + ")");
  return decode_payload(f->type, f->payload);
}

void FrameDecoder::feed(std::span<const std::byte> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  const std::size_t avail = buf_.size() - pos_;
  const std::byte* p = buf_.data() + pos_;
  // Reject a wrong magic as soon as its first bytes arrive.
  for (std::size_t i = 0; i < std::min<std::size_t>(4, avail); ++i)
    if (static_cast<char>(p[i]) != kMagic[i]) throw ProtocolError("bad frame magic");
  if (avail < kFrameHeaderSize) return std::nullopt;
  ByteReader r(std::span<const std::byte>(p, kFrameHeaderSize));
  r.raw(4);
  Frame f;
  f.version = r.u32();
  const std::uint32_t type = r.u32();
  const std::uint64_t len = r.u64();
  if (type < 1 || type > 4) throw ProtocolError("unknown message type " + std::to_string(type));
  if (len > kMaxPayloadSize) throw ProtocolError("frame payload length " + std::to_string(len) + " exceeds the limit");
  if (avail < kFrameHeaderSize + len) return std::nullopt;
  f.type = static_cast<MessageType>(type);
  f.payload.assign(p + kFrameHeaderSize, p + kFrameHeaderSize + len);
  pos_ += kFrameHeaderSize + len;
  if (pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > (1u << 20) && pos_ > buf_.size() / 2) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return f;
}

void append_image(std::vector<float>& out, const Grid2<Vec3>& image) {
  out.reserve(out.size() + image.size() * 3);
  for (const auto& v : image.data())
    for (int k = 0; k < 3; ++k) out.push_back(static_cast<float>(v[k]));
}

Grid2<Vec3> image_from_floats(std::span<const float> data, std::size_t index, int height, int width) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if ((index + 1) * n * 3 > data.size()) throw ProtocolError("image index out of range");
  Grid2<Vec3> out(width, height);
  const float* p = data.data() + index * n * 3;
  for (std::size_t i = 0; i < n; ++i) out[i] = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
  return out;
}

}  // namespace touchrecon
