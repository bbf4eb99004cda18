#pragma once

#include "touchrecon/common/binary_io.hpp"
#include "touchrecon/field/grid_sdf.hpp"

#include <array>
#include <vector>

namespace touchrecon {

/// Explicit SDF on a tetrahedral lattice over [-1,1]^3: N cubes per axis,
/// (N+1)^3 vertices, each cube split into six tetrahedra around its main
/// diagonal. Parameters are stored flat: N_v signed distances followed by
/// 3 N_v offset components (vertex-major).
class TetGrid {
 public:
  TetGrid() = default;
  TetGrid(int resolution, double iso);

  int resolution() const { return n_; }
  double spacing() const { return 2.0 / n_; }
  double iso() const { return iso_; }
  void set_iso(double iso) { iso_ = iso; }
  std::size_t vertex_count() const { return nv_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double& sdf(std::size_t v) { return params_[v]; }
  double sdf(std::size_t v) const { return params_[v]; }
  Vec3 offset(std::size_t v) const {
    return {params_[nv_ + 3 * v], params_[nv_ + 3 * v + 1], params_[nv_ + 3 * v + 2]};
  }
  void set_offset(std::size_t v, const Vec3& d);
  static std::size_t sdf_index(std::size_t v) { return v; }
  std::size_t offset_index(std::size_t v, int axis) const { return nv_ + 3 * v + axis; }

  std::size_t vertex_index(int i, int j, int k) const {
    return i + static_cast<std::size_t>(n_ + 1) * (j + static_cast<std::size_t>(n_ + 1) * k);
  }
  Vec3 lattice_position(std::size_t v) const;
  Vec3 position(std::size_t v) const { return lattice_position(v) + offset(v); }

  /// Limit every offset component to 0.45 of the spacing.
  void clamp_offsets();
  double max_offset() const { return 0.45 * spacing(); }

  void write(ByteWriter& w) const;
  static TetGrid read(ByteReader& r);

 private:
  int n_ = 0;
  std::size_t nv_ = 0;
  double iso_ = 0.0;
  std::vector<double> params_;
};

/// Corner bit patterns (x = 1, y = 2, z = 4) of the six tetrahedra of a cube.
const std::array<std::array<int, 4>, 6>& cube_tetrahedra();

/// s_i = field value at each lattice vertex; offsets zero.
TetGrid init_tet_from_field(const GridSDF& field, int resolution, double iso);

}  // namespace touchrecon
