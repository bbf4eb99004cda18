#include "touchrecon/field/tet_grid.hpp"

#include "touchrecon/common/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace touchrecon {
namespace {

constexpr char kMagic[4] = {'T', 'R', 'T', 'G'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

TetGrid::TetGrid(int resolution, double iso) : n_(resolution), iso_(iso) {
  if (resolution < 1) throw InputError("tet grid resolution must be positive");
  nv_ = static_cast<std::size_t>(n_ + 1) * (n_ + 1) * (n_ + 1);
  params_.assign(4 * nv_, 0.0);
}

void TetGrid::set_offset(std::size_t v, const Vec3& d) {
  for (int a = 0; a < 3; ++a) params_[nv_ + 3 * v + a] = d[a];
}

Vec3 TetGrid::lattice_position(std::size_t v) const {
  const std::size_t n = n_ + 1;
  const auto i = static_cast<int>(v % n), j = static_cast<int>((v / n) % n), k = static_cast<int>(v / (n * n));
  return {-1.0 + 2.0 * i / n_, -1.0 + 2.0 * j / n_, -1.0 + 2.0 * k / n_};
}

void TetGrid::clamp_offsets() {
  const double m = max_offset();
  for (std::size_t i = nv_; i < params_.size(); ++i) params_[i] = std::clamp(params_[i], -m, m);
}

const std::array<std::array<int, 4>, 6>& cube_tetrahedra() {
  // Paths from corner 0 to corner 7 stepping one axis at a time.
  static const std::array<std::array<int, 4>, 6> tets = {{
      {0, 1, 3, 7},  // x, y, z
      {0, 1, 5, 7},  // x, z, y
      {0, 2, 3, 7},  // y, x, z
      {0, 2, 6, 7},  // y, z, x
      {0, 4, 5, 7},  // z, x, y
      {0, 4, 6, 7},  // z, y, x
  }};
  return tets;
}

void TetGrid::write(ByteWriter& w) const {
  w.raw(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(n_));
  w.f64(iso_);
  for (double p : params_) w.f64(p);
}

TetGrid TetGrid::read(ByteReader& r) {
  if (r.raw(4) != std::string_view(kMagic, 4)) throw InputError("not a tet grid checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kVersion)
    throw InputError(fmt::format("tet grid checkpoint version {} is not supported (expected {})", version, kVersion));
  const auto n = r.u32();
  if (n < 1 || n > 1024) throw InputError("tet grid checkpoint has an invalid resolution");
  const double iso = r.f64();
  TetGrid t(static_cast<int>(n), iso);
  for (auto& p : t.params_) p = r.f64();
  return t;
}

TetGrid init_tet_from_field(const GridSDF& field, int resolution, double iso) {
  TetGrid tet(resolution, iso);
  parallel_for(static_cast<std::ptrdiff_t>(tet.vertex_count()), [&](std::ptrdiff_t v) {
    tet.sdf(static_cast<std::size_t>(v)) = field.value(tet.lattice_position(static_cast<std::size_t>(v)));
  });
  return tet;
}

}  // namespace touchrecon
