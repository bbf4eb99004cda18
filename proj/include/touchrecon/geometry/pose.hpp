#pragma once

#include "touchrecon/common/types.hpp"

#include <array>

namespace touchrecon {

/// Rigid transform mapping local coordinates to world: x_w = R x_l + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;

  Vec3 x_axis() const { return rotation.col(0); }
  Vec3 y_axis() const { return rotation.col(1); }
  Vec3 z_axis() const { return rotation.col(2); }

  /// Throws if R is not a proper rotation within `tol`.
  void validate(double tol = 1e-9) const;

  /// Frame whose z axis is `z` (normalized); x is chosen from `reference`
  /// projected into the plane, falling back to a fixed axis when parallel.
  static Pose from_z_axis(const Vec3& z, const Vec3& origin, const Vec3& reference = Vec3::UnitZ());

  /// Row-major R followed by t.
  std::array<double, 12> to_array() const;
  static Pose from_array(const std::array<double, 12>& values);
};

}  // namespace touchrecon
