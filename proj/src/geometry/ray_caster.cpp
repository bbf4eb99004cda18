#include "touchrecon/geometry/ray_caster.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace touchrecon {
namespace {

constexpr int kBins = 16;
constexpr std::uint32_t kLeafSize = 4;
// Slab distances are widened by this factor so that rounding can never cull a
// box that the exact ray touches.
constexpr double kSlabPad = 1.0 + 4.0 * std::numeric_limits<double>::epsilon();

double half_area(const Aabb& b) {
  if (!b.valid()) return 0.0;
  const Vec3 e = b.extent();
  return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
}

bool slab(const Aabb& box, const Vec3& local, const Vec3& anchor, const Vec3& inv, double t_min, double t_max,
          double& t_enter) {
  double lo = t_min, hi = t_max;
  for (int a = 0; a < 3; ++a) {
    double t0 = ((box.min[a] - anchor[a]) - local[a]) * inv[a];
    double t1 = ((box.max[a] - anchor[a]) - local[a]) * inv[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN arises for 0 * inf when the origin lies on a slab plane of a
    // direction-parallel axis; treat that axis as unconstrained.
    if (!std::isnan(t0)) lo = std::max(lo, t0);
    if (!std::isnan(t1)) hi = std::min(hi, t1 * kSlabPad);
    if (lo > hi) return false;
  }
  t_enter = lo;
  return true;
}

}  // namespace

void Ray::validate() const {
  if (!origin.allFinite() || !direction.allFinite()) throw InputError("ray has non-finite components");
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw InputError("ray direction is not unit length");
  if (!(t_min < t_max)) throw InputError("ray interval is empty");
}

RayCaster::RayCaster(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.faces.empty()) throw InputError("cannot build a ray caster for an empty mesh");
  mesh_.validate();
  const auto n = static_cast<std::uint32_t>(mesh_.faces.size());
  tri_boxes_.resize(n);
  centroids_.resize(n);
  order_.resize(n);
  for (std::uint32_t f = 0; f < n; ++f) {
    Aabb b;
    for (auto v : mesh_.faces[f]) b.extend(mesh_.vertices[v]);
    tri_boxes_[f] = b;
    centroids_[f] = b.center();
    order_[f] = f;
  }
  nodes_.reserve(2 * n / kLeafSize + 1);
  build(0, n);
  centroids_.clear();
  centroids_.shrink_to_fit();
}

std::uint32_t RayCaster::build(std::uint32_t begin, std::uint32_t end) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (auto i = begin; i < end; ++i) {
    box.extend(tri_boxes_[order_[i]]);
    cbox.extend(centroids_[order_[i]]);
  }
  nodes_[index].box = box;
  const auto count = end - begin;
  auto make_leaf = [&] {
    nodes_[index].first = begin;
    nodes_[index].count = count;
    return index;
  };
  if (count <= kLeafSize) return make_leaf();

  int best_axis = -1, best_split = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = cbox.min[axis], ext = cbox.max[axis] - lo;
    if (!(ext > 0.0)) continue;
    std::array<Aabb, kBins> bins;
    std::array<std::uint32_t, kBins> counts{};
    for (auto i = begin; i < end; ++i) {
      const auto f = order_[i];
      int b = static_cast<int>(kBins * (centroids_[f][axis] - lo) / ext);
      b = std::clamp(b, 0, kBins - 1);
      bins[b].extend(tri_boxes_[f]);
      ++counts[b];
    }
    std::array<double, kBins> right_cost{};
    Aabb acc;
    std::uint32_t acc_n = 0;
    for (int b = kBins - 1; b > 0; --b) {
      acc.extend(bins[b]);
      acc_n += counts[b];
      right_cost[b] = half_area(acc) * acc_n;
    }
    acc = Aabb{};
    acc_n = 0;
    for (int b = 0; b < kBins - 1; ++b) {
      acc.extend(bins[b]);
      acc_n += counts[b];
      const double cost = half_area(acc) * acc_n + right_cost[b + 1];
      if (acc_n > 0 && acc_n < count && cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = b;
      }
    }
  }

  std::uint32_t mid;
  if (best_axis < 0) {
    // All centroids coincide: split by index.
    mid = begin + count / 2;
  } else {
    const double lo = cbox.min[best_axis], ext = cbox.max[best_axis] - lo;
    auto it = std::partition(order_.begin() + begin, order_.begin() + end, [&](std::uint32_t f) {
      int b = static_cast<int>(kBins * (centroids_[f][best_axis] - lo) / ext);
      return std::clamp(b, 0, kBins - 1) <= best_split;
    });
    mid = static_cast<std::uint32_t>(it - order_.begin());
    if (mid == begin || mid == end) mid = begin + count / 2;
  }
  build(begin, mid);
  const auto right = build(mid, end);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

bool RayCaster::intersect_triangle(std::uint32_t face, const Vec3& local, const Vec3& anchor, const Vec3& dir,
                                   double t_min, double t_max, Hit& hit) const {
  const auto& f = mesh_.faces[face];
  const Vec3& v0 = mesh_.vertices[f[0]];
  const Vec3 e1 = mesh_.vertices[f[1]] - v0;
  const Vec3 e2 = mesh_.vertices[f[2]] - v0;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (det == 0.0) return false;
  const double inv = 1.0 / det;
  const Vec3 s = (anchor - v0) + local;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(q) * inv;
  if (t < t_min || t > t_max) return false;
  hit.t = t;
  hit.face = face;
  hit.u = u;
  hit.v = v;
  return true;
}

Hit RayCaster::finish(const Hit& h, const Vec3& local, const Vec3& anchor, const Vec3& dir) const {
  Hit out = h;
  out.point = anchor + (local + h.t * dir);
  const Vec3 n = mesh_.face_normal(h.face);
  out.front_facing = n.dot(dir) < 0.0;
  out.normal = out.front_facing ? n : Vec3(-n);
  return out;
}

std::optional<Hit> RayCaster::cast(const Ray& ray, const Vec3& anchor) const {
  const Vec3& local = ray.origin;
  const Vec3& dir = ray.direction;
  const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
  Hit best;
  bool found = false;
  double t_max = ray.t_max;

  std::array<std::uint32_t, 128> stack;
  int top = 0;
  double enter;
  if (!slab(nodes_[0].box, local, anchor, inv, ray.t_min, t_max, enter)) return std::nullopt;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        Hit h;
        const auto f = order_[i];
        if (!intersect_triangle(f, local, anchor, dir, ray.t_min, t_max, h)) continue;
        // Ties on t resolve to the lower face index, as in the exhaustive scan.
        if (!found || h.t < best.t || (h.t == best.t && f < best.face)) {
          best = h;
          found = true;
          t_max = h.t;
        }
      }
      continue;
    }
    const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1, right = node.first;
    double tl, tr;
    const bool hl = slab(nodes_[left].box, local, anchor, inv, ray.t_min, t_max, tl);
    const bool hr = slab(nodes_[right].box, local, anchor, inv, ray.t_min, t_max, tr);
    if (hl && hr) {
      // Push the farther child first so the nearer one is visited next.
      if (tl <= tr) {
        stack[top++] = right;
        stack[top++] = left;
      } else {
        stack[top++] = left;
        stack[top++] = right;
      }
    } else if (hl) {
      stack[top++] = left;
    } else if (hr) {
      stack[top++] = right;
    }
  }
  if (!found) return std::nullopt;
  return finish(best, local, anchor, dir);
}

std::optional<Hit> RayCaster::cast_brute_force(const Ray& ray, const Vec3& anchor) const {
  Hit best;
  bool found = false;
  double t_max = ray.t_max;
  for (std::uint32_t f = 0; f < mesh_.faces.size(); ++f) {
    Hit h;
    if (!intersect_triangle(f, ray.origin, anchor, ray.direction, ray.t_min, t_max, h)) continue;
    if (!found || h.t < best.t) {
      best = h;
      found = true;
      t_max = h.t;
    }
  }
  if (!found) return std::nullopt;
  return finish(best, ray.origin, anchor, ray.direction);
}

std::size_t RayCaster::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.count > 0; }));
}

RayCaster build_ray_caster(const TriangleMesh& mesh) { return RayCaster(mesh); }

std::optional<Hit> cast_ray(const RayCaster& caster, const Ray& ray) { return caster.cast(ray); }

}  // namespace touchrecon
