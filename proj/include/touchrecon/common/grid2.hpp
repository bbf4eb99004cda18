#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace touchrecon {

/// Dense row-major 2-D array. Row 0 is the bottom row of an image (smallest y),
/// which matches the scanline order of PFM files.
template <class T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) {
    assert(row >= 0 && row < height_ && col >= 0 && col < width_);
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  const T& operator()(int row, int col) const {
    assert(row >= 0 && row < height_ && col >= 0 && col < width_);
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid2&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid2<std::uint8_t>;

inline std::size_t count_true(const Mask& mask) {
  std::size_t n = 0;
  for (auto v : mask.data()) n += v ? 1 : 0;
  return n;
}

}  // namespace touchrecon
