#pragma once

#include "touchrecon/field/tet_grid.hpp"
#include "touchrecon/geometry/mesh.hpp"

#include <span>
#include <vector>

namespace touchrecon {

/// Output vertex p = P_a + t (P_b - P_a) on lattice edge (a, b), where P are
/// offset vertex positions, a is the inside endpoint and
/// t = l_a / (l_a - l_b) with levels l = s + iso.
struct MtVertexSource {
  std::uint32_t a = 0, b = 0;
  double t = 0.0;
};

struct MtResult {
  TriangleMesh mesh;  // faces oriented from inside (l < 0) to outside
  std::vector<MtVertexSource> sources;
};

/// Surface extraction on the level set s + iso = 0 (a vertex is inside when
/// s < -iso, so a more negative iso grows the solid). Vertices are shared
/// between tetrahedra through their lattice edge; output order depends only on
/// the grid.
MtResult extract_surface(const TetGrid& tet);
TriangleMesh marching_tetrahedra(const TetGrid& tet);

/// Chains dL/d(vertex position) into dL/d(params), adding into `grad`
/// (laid out like TetGrid::params()).
void marching_tetrahedra_backward(const TetGrid& tet, const MtResult& result, std::span<const Vec3> vertex_grad,
                                  std::span<double> grad);

/// Triangles of one tetrahedron with corner positions p and levels l, as
/// triples of (inside, outside) corner pairs, wound so the normal points from
/// the inside corners to the outside ones.
struct TetEdge {
  int inside = 0, outside = 0;
};
std::vector<std::array<TetEdge, 3>> tetrahedron_triangles(const std::array<Vec3, 4>& p,
                                                           const std::array<double, 4>& level);

}  // namespace touchrecon
