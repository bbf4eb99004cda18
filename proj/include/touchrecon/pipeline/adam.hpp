#pragma once

#include "touchrecon/common/binary_io.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace touchrecon {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

/// Adaptive-moment optimizer with bias correction over a flat parameter
/// vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, const AdamOptions& options = {});

  std::size_t size() const { return m_.size(); }
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

  /// params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<double> params, std::span<const double> grad, double lr);

  void write(ByteWriter& w) const;
  static Adam read(ByteReader& r);

  bool operator==(const Adam&) const = default;

 private:
  AdamOptions options_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace touchrecon
