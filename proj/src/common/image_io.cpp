#include "touchrecon/common/image_io.hpp"

#include "touchrecon/common/binary_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace touchrecon {

std::vector<std::byte> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(chars.size());
  std::memcpy(out.data(), chars.data(), chars.size());
  return out;
}

void write_file_bytes(const std::string& path, std::span<const std::byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(fmt::format("write failed for '{}'", path));
}

namespace {

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  std::size_t data_offset = 0;
};

// Reads `count` whitespace-separated header tokens; the single whitespace byte
// after the last token is consumed as the header terminator.
NetpbmHeader parse_header(std::span<const std::byte> bytes, int count, const std::string& path) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto ch = [&](std::size_t k) { return static_cast<char>(bytes[k]); };
  while (static_cast<int>(tokens.size()) < count) {
    while (i < bytes.size() && std::isspace(static_cast<unsigned char>(ch(i)))) ++i;
    if (i < bytes.size() && ch(i) == '#') {
      while (i < bytes.size() && ch(i) != '\n') ++i;
      continue;
    }
    std::string tok;
    while (i < bytes.size() && !std::isspace(static_cast<unsigned char>(ch(i)))) tok += ch(i++);
    if (tok.empty()) throw InputError(fmt::format("truncated image header in '{}'", path));
    tokens.push_back(tok);
  }
  if (i >= bytes.size()) throw InputError(fmt::format("missing image data in '{}'", path));
  ++i;
  NetpbmHeader h;
  h.magic = tokens[0];
  try {
    h.width = std::stoi(tokens[1]);
    h.height = std::stoi(tokens[2]);
    h.scale = std::stod(tokens[3]);
  } catch (const std::exception&) {
    throw InputError(fmt::format("malformed image header in '{}'", path));
  }
  if (h.width <= 0 || h.height <= 0) throw InputError(fmt::format("bad image size in '{}'", path));
  h.data_offset = i;
  return h;
}

std::vector<float> read_floats(std::span<const std::byte> data, std::size_t count, bool little,
                               const std::string& path) {
  if (data.size() < count * 4) throw InputError(fmt::format("truncated PFM data in '{}'", path));
  std::vector<float> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      const int shift = little ? 8 * b : 8 * (3 - b);
      v |= static_cast<std::uint32_t>(data[k * 4 + b]) << shift;
    }
    out[k] = std::bit_cast<float>(v);
  }
  return out;
}

void write_pfm_impl(const std::string& path, int width, int height, int channels,
                    const std::vector<float>& values) {
  ByteWriter w;
  w.raw(fmt::format("{}\n{} {}\n-1.0\n", channels == 1 ? "Pf" : "PF", width, height));
  for (float v : values) w.f32(v);
  write_file_bytes(path, w.buffer());
}

}  // namespace

void write_pfm(const std::string& path, const Grid2<double>& image) {
  std::vector<float> values(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) values[i] = static_cast<float>(image[i]);
  write_pfm_impl(path, image.width(), image.height(), 1, values);
}

Grid2<double> read_pfm(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_header(bytes, 4, path);
  if (h.magic != "Pf") throw InputError(fmt::format("'{}' is not a single-channel PFM", path));
  const auto floats = read_floats(std::span(bytes).subspan(h.data_offset),
                                  static_cast<std::size_t>(h.width) * h.height, h.scale < 0, path);
  Grid2<double> image(h.width, h.height);
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = floats[i];
  return image;
}

void write_pfm_rgb(const std::string& path, const Grid2<Vec3>& image) {
  std::vector<float> values;
  values.reserve(image.size() * 3);
  for (const auto& v : image.data())
    for (int c = 0; c < 3; ++c) values.push_back(static_cast<float>(v[c]));
  write_pfm_impl(path, image.width(), image.height(), 3, values);
}

Grid2<Vec3> read_pfm_rgb(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_header(bytes, 4, path);
  if (h.magic != "PF") throw InputError(fmt::format("'{}' is not a three-channel PFM", path));
  const auto floats = read_floats(std::span(bytes).subspan(h.data_offset),
                                  static_cast<std::size_t>(h.width) * h.height * 3, h.scale < 0, path);
  Grid2<Vec3> image(h.width, h.height);
  for (std::size_t i = 0; i < image.size(); ++i)
    image[i] = Vec3(floats[3 * i], floats[3 * i + 1], floats[3 * i + 2]);
  return image;
}

void write_pgm_mask(const std::string& path, const Mask& mask) {
  ByteWriter w;
  w.raw(fmt::format("P5\n{} {}\n255\n", mask.width(), mask.height()));
  for (int row = mask.height() - 1; row >= 0; --row)
    for (int col = 0; col < mask.width(); ++col) w.u8(mask(row, col) ? 255 : 0);
  write_file_bytes(path, w.buffer());
}

Mask read_pgm_mask(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_header(bytes, 4, path);
  if (h.magic != "P5") throw InputError(fmt::format("'{}' is not a binary PGM", path));
  if (h.scale > 255) throw InputError(fmt::format("16-bit PGM not supported: '{}'", path));
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < n) throw InputError(fmt::format("truncated PGM '{}'", path));
  Mask mask(h.width, h.height);
  std::size_t k = h.data_offset;
  for (int row = h.height - 1; row >= 0; --row)
    for (int col = 0; col < h.width; ++col) mask(row, col) = static_cast<std::uint8_t>(bytes[k++]) > 127 ? 1 : 0;
  return mask;
}

}  // namespace touchrecon
