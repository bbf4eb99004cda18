#pragma once

#include "touchrecon/geometry/mesh.hpp"

#include <cstdint>
#include <vector>

namespace touchrecon {

struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // face normal
  std::uint32_t face = 0;
};

/// Area-uniform samples; deterministic for a given seed.
std::vector<SurfacePoint> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);
std::vector<Vec3> sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

struct PoissonDiskResult {
  std::vector<SurfacePoint> points;
  std::size_t target = 0;   // ceil(requested * oversample_factor)
  bool exhausted = false;   // fewer than `target` points could be placed
};

/// Dart throwing over area-uniform candidates with a Euclidean minimum
/// distance. Stops at `target` points or after a run of rejected darts.
PoissonDiskResult poisson_disk_sample(const TriangleMesh& mesh, double min_dist, std::size_t requested,
                                      double oversample_factor, std::uint64_t seed);

/// Radius at which `count` disks of that radius cover roughly the surface.
double default_poisson_radius(const TriangleMesh& mesh, std::size_t count);

}  // namespace touchrecon
