#include "touchrecon/geometry/sampling.hpp"

#include "touchrecon/common/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace touchrecon {
namespace {

class AreaSampler {
 public:
  explicit AreaSampler(const TriangleMesh& mesh) : mesh_(mesh) {
    if (mesh.faces.empty()) throw InputError("cannot sample an empty mesh");
    cdf_.reserve(mesh.faces.size());
    double acc = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      acc += mesh.face_area(f);
      cdf_.push_back(acc);
    }
    if (!(acc > 0.0)) throw InputError("cannot sample a mesh with zero surface area");
  }

  SurfacePoint draw(Rng& rng) const {
    const double x = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    if (it == cdf_.end()) --it;
    const auto f = static_cast<std::uint32_t>(it - cdf_.begin());
    double r1 = rng.uniform(), r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const auto& t = mesh_.faces[f];
    const Vec3& a = mesh_.vertices[t[0]];
    SurfacePoint p;
    p.position = a + r1 * (mesh_.vertices[t[1]] - a) + r2 * (mesh_.vertices[t[2]] - a);
    p.normal = mesh_.face_normal(f);
    p.face = f;
    return p;
  }

 private:
  const TriangleMesh& mesh_;
  std::vector<double> cdf_;
};

struct CellKey {
  long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(k.x) * 73856093u ^
                                               static_cast<std::uint64_t>(k.y) * 19349663u ^
                                               static_cast<std::uint64_t>(k.z) * 83492791u));
  }
};

}  // namespace

std::vector<SurfacePoint> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be at least 1");
  AreaSampler sampler(mesh);
  Rng rng(seed);
  std::vector<SurfacePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.draw(rng));
  return out;
}

std::vector<Vec3> sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  auto pts = sample_surface(mesh, n, seed);
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.position);
  return out;
}

PoissonDiskResult poisson_disk_sample(const TriangleMesh& mesh, double min_dist, std::size_t requested,
                                      double oversample_factor, std::uint64_t seed) {
  if (!(min_dist > 0.0)) throw InputError("poisson_disk_sample: min_dist must be positive");
  if (oversample_factor < 1.0) throw InputError("poisson_disk_sample: oversample_factor must be >= 1");
  AreaSampler sampler(mesh);
  Rng rng(seed);
  PoissonDiskResult result;
  result.target = static_cast<std::size_t>(std::ceil(static_cast<double>(requested) * oversample_factor));

  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
  auto key = [&](const Vec3& p) {
    return CellKey{static_cast<long>(std::floor(p.x() / min_dist)), static_cast<long>(std::floor(p.y() / min_dist)),
                   static_cast<long>(std::floor(p.z() / min_dist))};
  };
  const double d2 = min_dist * min_dist;
  // A long run of rejections means the surface is (nearly) saturated.
  const std::size_t max_failures = 2000 + 50 * result.target;
  std::size_t failures = 0;
  while (result.points.size() < result.target && failures < max_failures) {
    const SurfacePoint cand = sampler.draw(rng);
    const CellKey k = key(cand.position);
    bool ok = true;
    for (long dx = -1; dx <= 1 && ok; ++dx)
      for (long dy = -1; dy <= 1 && ok; ++dy)
        for (long dz = -1; dz <= 1 && ok; ++dz) {
          auto it = grid.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == grid.end()) continue;
          for (auto idx : it->second)
            if ((result.points[idx].position - cand.position).squaredNorm() < d2) {
              ok = false;
              break;
            }
        }
    if (!ok) {
      ++failures;
      continue;
    }
    failures = 0;
    grid[k].push_back(static_cast<std::uint32_t>(result.points.size()));
    result.points.push_back(cand);
  }
  result.exhausted = result.points.size() < result.target;
  return result;
}

double default_poisson_radius(const TriangleMesh& mesh, std::size_t count) {
  const double area = surface_area(mesh);
  return 1.2 * std::sqrt(area / (std::numbers::pi * static_cast<double>(std::max<std::size_t>(count, 1))));
}

}  // namespace touchrecon
