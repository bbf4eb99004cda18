#include "touchrecon/geometry/pose.hpp"

#include <fmt/format.h>

#include <cmath>

namespace touchrecon {

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

void Pose::validate(double tol) const {
  const double orth = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(orth <= tol)) throw InputError(fmt::format("pose rotation is not orthonormal (error {:.3g})", orth));
  const double det = rotation.determinant();
  if (!(std::abs(det - 1.0) <= 10 * tol))
    throw InputError(fmt::format("pose rotation has determinant {:.6f}", det));
  if (!translation.allFinite()) throw InputError("pose translation is not finite");
}

Pose Pose::from_z_axis(const Vec3& z_in, const Vec3& origin, const Vec3& reference) {
  const Vec3 z = z_in.normalized();
  Vec3 ref = reference;
  if (std::abs(ref.normalized().dot(z)) > 0.95) ref = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  // x = z × reference, y = z × x: with z forward this gives x right and y
  // down relative to the reference "up" direction.
  Vec3 x = z.cross(ref).normalized();
  Vec3 y = z.cross(x);
  Pose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = z;
  p.translation = origin;
  return p;
}

std::array<double, 12> Pose::to_array() const {
  std::array<double, 12> a{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a[r * 3 + c] = rotation(r, c);
  for (int i = 0; i < 3; ++i) a[9 + i] = translation[i];
  return a;
}

Pose Pose::from_array(const std::array<double, 12>& a) {
  Pose p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = a[r * 3 + c];
  for (int i = 0; i < 3; ++i) p.translation[i] = a[9 + i];
  return p;
}

}  // namespace touchrecon
