#pragma once

#include "touchrecon/field/marching_tetrahedra.hpp"
#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/integration/virtual_observation.hpp"

#include <span>

namespace touchrecon {

struct NormalConsistencyResult {
  double value = 0.0;
  std::size_t edges = 0;
  bool empty = false;  // no edges: value 0 by convention
};

/// Mean over unique edges of 1 - n_i . n_j with area-weighted vertex normals.
/// Adds weight * dL/d(vertex positions) into `position_grad`.
NormalConsistencyResult normal_consistency_loss(const TriangleMesh& mesh, double weight,
                                                std::span<Vec3> position_grad);

/// Depth/normal loss against a mesh by ray casting. Rays that miss the mesh
/// are counted but carry no gradient.
struct MeshDepthNormalResult {
  double depth = 0.0;
  double normal = 0.0;
  std::size_t rays = 0;
  std::size_t misses = 0;
};

MeshDepthNormalResult mesh_depth_normal_loss(const TriangleMesh& mesh, const RayCaster& caster,
                                             std::span<const RaySample> samples, double w_depth, double w_normal,
                                             std::span<Vec3> position_grad);

}  // namespace touchrecon
