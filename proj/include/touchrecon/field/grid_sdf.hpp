#pragma once

#include "touchrecon/common/binary_io.hpp"
#include "touchrecon/common/types.hpp"

#include <array>
#include <atomic>
#include <span>
#include <vector>

namespace touchrecon {

struct FieldSample {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
};

inline constexpr int kMaxFieldLevels = 8;

/// Value, derivatives and the sparse parameter Jacobian of the field at one
/// point: value = sum_j weight[j] * params[index[j]].
struct FieldStencil {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();  // trilinear: zero diagonal within a cell
  int count = 0;
  std::array<std::uint32_t, 8 * kMaxFieldLevels> index{};
  std::array<double, 8 * kMaxFieldLevels> weight{};
  std::array<Vec3, 8 * kMaxFieldLevels> dweight{};  // d weight / dx
};

struct UnlockSchedule {
  int start_step = 1000;
  int every = 400;
  int initial_active = 0;  // 0: half the levels, rounded up
};

/// Sum of dense trilinear grids over [-1,1]^3. A level with resolution R has
/// R cells and R+1 nodes per axis, stored x-fastest; node i sits at
/// -1 + 2i/R. Only active levels contribute.
class GridSDF {
 public:
  GridSDF() = default;
  explicit GridSDF(std::vector<int> resolutions, int active_levels = -1);
  GridSDF(const GridSDF& other);
  GridSDF& operator=(const GridSDF& other);

  int level_count() const { return static_cast<int>(resolutions_.size()); }
  int resolution(int level) const { return resolutions_[level]; }
  int finest_resolution() const { return resolutions_.back(); }
  double finest_cell_size() const { return 2.0 / resolutions_.back(); }
  std::size_t level_offset(int level) const { return offsets_[level]; }
  std::size_t param_count() const { return params_.size(); }

  int active_levels() const { return active_; }
  void set_active_levels(int n);

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double value(const Vec3& x) const;
  FieldSample eval(const Vec3& x) const;
  void stencil(const Vec3& x, FieldStencil& out) const;

  /// Coarsest level set to |x| - radius at its nodes, every other level zero.
  void init_sphere(double radius);

  /// Number of queries clamped into the domain since construction.
  std::uint64_t clamp_count() const { return clamped_.load(std::memory_order_relaxed); }

  void write(ByteWriter& w) const;
  static GridSDF read(ByteReader& r);

 private:
  Vec3 clamp(const Vec3& x) const;

  std::vector<int> resolutions_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  int active_ = 0;
  mutable std::atomic<std::uint64_t> clamped_{0};
};

/// Levels active at `step` under the schedule: the initial set until
/// start_step, then one more at start_step and every `every` steps after.
int active_levels_at(const UnlockSchedule& schedule, int level_count, int step);
void unlock_level(GridSDF& field, int step, const UnlockSchedule& schedule);

/// Conservative per-cell value range of a field on a coarse grid, used to
/// skip samples that cannot be near the zero level set.
class FieldBounds {
 public:
  FieldBounds() = default;
  FieldBounds(const GridSDF& field, int resolution);

  int resolution() const { return res_; }
  /// Lower bound of the field over the cell containing x.
  double lower(const Vec3& x) const { return lo_[cell(x)]; }
  double upper(const Vec3& x) const { return hi_[cell(x)]; }
  /// Distance along `dir` from x to the boundary of x's cell.
  double cell_exit(const Vec3& x, const Vec3& dir) const;

 private:
  std::size_t cell(const Vec3& x) const;

  int res_ = 0;
  std::vector<double> lo_, hi_;
};

}  // namespace touchrecon
