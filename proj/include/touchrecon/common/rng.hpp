#pragma once

#include "touchrecon/common/types.hpp"

#include <cstdint>
#include <random>

namespace touchrecon {

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random source. The conversions to floating point are written
/// out here instead of using <random> distributions, whose output differs
/// between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, a, b); used to give each optimization
  /// step its own generator so that resumed runs replay exactly.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);  // [0, n)
  double normal();
  Vec3 unit_vector();  // uniform on the sphere

 private:
  std::mt19937_64 engine_;
};

}  // namespace touchrecon
