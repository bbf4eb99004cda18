#include "touchrecon/field/grid_sdf.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <cmath>

namespace touchrecon {
namespace {

constexpr char kMagic[4] = {'T', 'R', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

struct Corner {
  std::array<int, 3> i0;
  Vec3 f;  // fractional position in the cell
};

Corner locate(const Vec3& x, int res) {
  Corner c;
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] + 1.0) * 0.5 * res;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, res - 1);
    c.i0[a] = i;
    c.f[a] = u - i;
  }
  return c;
}

}  // namespace

GridSDF::GridSDF(std::vector<int> resolutions, int active_levels) : resolutions_(std::move(resolutions)) {
  if (resolutions_.empty() || static_cast<int>(resolutions_.size()) > kMaxFieldLevels)
    throw InputError(fmt::format("field needs between 1 and {} levels", kMaxFieldLevels));
  std::size_t total = 0;
  for (int r : resolutions_) {
    if (r < 1) throw InputError("field level resolution must be positive");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(r + 1) * (r + 1) * (r + 1);
  }
  params_.assign(total, 0.0);
  set_active_levels(active_levels < 0 ? level_count() : active_levels);
}

GridSDF::GridSDF(const GridSDF& o)
    : resolutions_(o.resolutions_), offsets_(o.offsets_), params_(o.params_), active_(o.active_),
      clamped_(o.clamped_.load()) {}

GridSDF& GridSDF::operator=(const GridSDF& o) {
  resolutions_ = o.resolutions_;
  offsets_ = o.offsets_;
  params_ = o.params_;
  active_ = o.active_;
  clamped_ = o.clamped_.load();
  return *this;
}

void GridSDF::set_active_levels(int n) { active_ = std::clamp(n, 1, level_count()); }

Vec3 GridSDF::clamp(const Vec3& x) const {
  if ((x.array().abs() <= 1.0).all()) return x;
  clamped_.fetch_add(1, std::memory_order_relaxed);
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

double GridSDF::value(const Vec3& xin) const {
  const Vec3 x = clamp(xin);
  double v = 0.0;
  for (int l = 0; l < active_; ++l) {
    const int res = resolutions_[l], n = res + 1;
    const Corner c = locate(x, res);
    const double* p = params_.data() + offsets_[l] + c.i0[0] + static_cast<std::size_t>(n) * (c.i0[1] + n * c.i0[2]);
    const std::size_t sy = n, sz = static_cast<std::size_t>(n) * n;
    const double fx = c.f.x(), fy = c.f.y(), fz = c.f.z();
    const double c00 = p[0] + fx * (p[1] - p[0]);
    const double c10 = p[sy] + fx * (p[sy + 1] - p[sy]);
    const double c01 = p[sz] + fx * (p[sz + 1] - p[sz]);
    const double c11 = p[sz + sy] + fx * (p[sz + sy + 1] - p[sz + sy]);
    const double c0 = c00 + fy * (c10 - c00);
    const double c1 = c01 + fy * (c11 - c01);
    v += c0 + fz * (c1 - c0);
  }
  return v;
}

FieldSample GridSDF::eval(const Vec3& x) const {
  FieldStencil s;
  stencil(x, s);
  return {s.value, s.grad};
}

void GridSDF::stencil(const Vec3& xin, FieldStencil& s) const {
  const Vec3 x = clamp(xin);
  s.value = 0.0;
  s.grad.setZero();
  s.hessian.setZero();
  s.count = 0;
  for (int l = 0; l < active_; ++l) {
    const int res = resolutions_[l], n = res + 1;
    const double scale = 0.5 * res;  // d(cell coordinate)/dx
    const Corner c = locate(x, res);
    const std::size_t base = offsets_[l] + c.i0[0] + static_cast<std::size_t>(n) * (c.i0[1] + n * c.i0[2]);
    for (int b = 0; b < 8; ++b) {
      const int bx = b & 1, by = (b >> 1) & 1, bz = (b >> 2) & 1;
      const double wx = bx ? c.f.x() : 1.0 - c.f.x();
      const double wy = by ? c.f.y() : 1.0 - c.f.y();
      const double wz = bz ? c.f.z() : 1.0 - c.f.z();
      const double sx = (bx ? 1.0 : -1.0) * scale, sy = (by ? 1.0 : -1.0) * scale, sz = (bz ? 1.0 : -1.0) * scale;
      const std::uint32_t idx = static_cast<std::uint32_t>(base + bx + static_cast<std::size_t>(n) * (by + n * bz));
      const double w = wx * wy * wz;
      const Vec3 dw(sx * wy * wz, wx * sy * wz, wx * wy * sz);
      const double p = params_[idx];
      s.index[s.count] = idx;
      s.weight[s.count] = w;
      s.dweight[s.count] = dw;
      ++s.count;
      s.value += w * p;
      s.grad += p * dw;
      const double hxy = sx * sy * wz, hxz = sx * wy * sz, hyz = wx * sy * sz;
      s.hessian(0, 1) += p * hxy;
      s.hessian(0, 2) += p * hxz;
      s.hessian(1, 2) += p * hyz;
    }
  }
  s.hessian(1, 0) = s.hessian(0, 1);
  s.hessian(2, 0) = s.hessian(0, 2);
  s.hessian(2, 1) = s.hessian(1, 2);
}

void GridSDF::init_sphere(double radius) {
  std::fill(params_.begin(), params_.end(), 0.0);
  const int res = resolutions_[0], n = res + 1;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 p(-1.0 + 2.0 * i / res, -1.0 + 2.0 * j / res, -1.0 + 2.0 * k / res);
        params_[i + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)] = p.norm() - radius;
      }
}

void GridSDF::write(ByteWriter& w) const {
  w.raw(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(resolutions_.size()));
  for (int r : resolutions_) w.u32(static_cast<std::uint32_t>(r));
  w.u32(static_cast<std::uint32_t>(active_));
  for (double p : params_) w.f64(p);
}

GridSDF GridSDF::read(ByteReader& r) {
  if (r.raw(4) != std::string_view(kMagic, 4)) throw InputError("not a field checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kVersion)
    throw InputError(fmt::format("field checkpoint version {} is not supported (expected {})", version, kVersion));
  const auto levels = r.u32();
  if (levels == 0 || levels > kMaxFieldLevels) throw InputError("field checkpoint has an invalid level count");
  std::vector<int> res(levels);
  for (auto& v : res) {
    v = static_cast<int>(r.u32());
    if (v < 1 || v > 1024) throw InputError("field checkpoint has an invalid resolution");
  }
  GridSDF f(res);
  f.set_active_levels(static_cast<int>(r.u32()));
  for (auto& p : f.params_) p = r.f64();
  return f;
}

int active_levels_at(const UnlockSchedule& s, int level_count, int step) {
  const int initial = s.initial_active > 0 ? s.initial_active : (level_count + 1) / 2;
  int active = initial;
  if (step >= s.start_step) active += 1 + (s.every > 0 ? (step - s.start_step) / s.every : level_count);
  return std::clamp(active, 1, level_count);
}

void unlock_level(GridSDF& field, int step, const UnlockSchedule& schedule) {
  field.set_active_levels(active_levels_at(schedule, field.level_count(), step));
}

FieldBounds::FieldBounds(const GridSDF& field, int resolution) : res_(resolution) {
  const std::size_t cells = static_cast<std::size_t>(res_) * res_ * res_;
  lo_.assign(cells, 0.0);
  hi_.assign(cells, 0.0);
  const auto& p = field.params();
  for (int l = 0; l < field.active_levels(); ++l) {
    const int R = field.resolution(l), n = R + 1;
    const double* base = p.data() + field.level_offset(l);
    // Node range per bounds cell along one axis (inclusive).
    std::vector<int> first(res_), last(res_);
    for (int c = 0; c < res_; ++c) {
      first[c] = static_cast<int>(std::floor(static_cast<double>(c) * R / res_));
      last[c] = std::min(R, static_cast<int>(std::ceil(static_cast<double>(c + 1) * R / res_)));
    }
    // Separable min/max: x, then y, then z.
    std::vector<double> ax_lo(static_cast<std::size_t>(res_) * n * n), ax_hi(ax_lo.size());
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < res_; ++c) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (int i = first[c]; i <= last[c]; ++i) {
            const double v = base[i + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          const std::size_t o = c + static_cast<std::size_t>(res_) * (j + static_cast<std::size_t>(n) * k);
          ax_lo[o] = lo;
          ax_hi[o] = hi;
        }
    std::vector<double> ay_lo(static_cast<std::size_t>(res_) * res_ * n), ay_hi(ay_lo.size());
    for (int k = 0; k < n; ++k)
      for (int cy = 0; cy < res_; ++cy)
        for (int cx = 0; cx < res_; ++cx) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (int j = first[cy]; j <= last[cy]; ++j) {
            const std::size_t o = cx + static_cast<std::size_t>(res_) * (j + static_cast<std::size_t>(n) * k);
            lo = std::min(lo, ax_lo[o]);
            hi = std::max(hi, ax_hi[o]);
          }
          const std::size_t o = cx + static_cast<std::size_t>(res_) * (cy + static_cast<std::size_t>(res_) * k);
          ay_lo[o] = lo;
          ay_hi[o] = hi;
        }
    for (int cz = 0; cz < res_; ++cz)
      for (int cy = 0; cy < res_; ++cy)
        for (int cx = 0; cx < res_; ++cx) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (int k = first[cz]; k <= last[cz]; ++k) {
            const std::size_t o = cx + static_cast<std::size_t>(res_) * (cy + static_cast<std::size_t>(res_) * k);
            lo = std::min(lo, ay_lo[o]);
            hi = std::max(hi, ay_hi[o]);
          }
          const std::size_t o = cx + static_cast<std::size_t>(res_) * (cy + static_cast<std::size_t>(res_) * cz);
          lo_[o] += lo;
          hi_[o] += hi;
        }
  }
}

double FieldBounds::cell_exit(const Vec3& x, const Vec3& dir) const {
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const int i = std::clamp(static_cast<int>(std::floor((x[a] + 1.0) * 0.5 * res_)), 0, res_ - 1);
    const double face = -1.0 + 2.0 * (dir[a] > 0.0 ? i + 1 : i) / res_;
    t = std::min(t, std::max((face - x[a]) / dir[a], 0.0));
  }
  return t;
}

std::size_t FieldBounds::cell(const Vec3& x) const {
  std::array<int, 3> i{};
  for (int a = 0; a < 3; ++a)
    i[a] = std::clamp(static_cast<int>(std::floor((x[a] + 1.0) * 0.5 * res_)), 0, res_ - 1);
  return i[0] + static_cast<std::size_t>(res_) * (i[1] + static_cast<std::size_t>(res_) * i[2]);
}

}  // namespace touchrecon
