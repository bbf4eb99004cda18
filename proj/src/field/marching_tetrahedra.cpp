#include "touchrecon/field/marching_tetrahedra.hpp"

#include <unordered_map>

namespace touchrecon {
namespace {

// Edge midpoint; orientation is decided on midpoints so that it depends only
// on the corner signs and positions, never on a degenerate interpolant.
Vec3 midpoint(const std::array<Vec3, 4>& p, const TetEdge& e) { return 0.5 * (p[e.inside] + p[e.outside]); }

}  // namespace

std::vector<std::array<TetEdge, 3>> tetrahedron_triangles(const std::array<Vec3, 4>& p,
                                                           const std::array<double, 4>& l) {
  std::array<int, 4> in{}, out{};
  int ni = 0, no = 0;
  for (int c = 0; c < 4; ++c) (l[c] < 0.0 ? in[ni++] : out[no++]) = c;
  std::vector<std::array<TetEdge, 3>> tris;
  if (ni == 1) {
    tris.push_back({TetEdge{in[0], out[0]}, TetEdge{in[0], out[1]}, TetEdge{in[0], out[2]}});
  } else if (ni == 3) {
    tris.push_back({TetEdge{in[0], out[0]}, TetEdge{in[1], out[0]}, TetEdge{in[2], out[0]}});
  } else if (ni == 2) {
    const TetEdge ac{in[0], out[0]}, ad{in[0], out[1]}, bd{in[1], out[1]}, bc{in[1], out[0]};
    tris.push_back({ac, ad, bd});
    tris.push_back({ac, bd, bc});
  }
  if (tris.empty()) return tris;
  Vec3 cin = Vec3::Zero(), cout = Vec3::Zero();
  for (int i = 0; i < ni; ++i) cin += p[in[i]] / ni;
  for (int i = 0; i < no; ++i) cout += p[out[i]] / no;
  const Vec3 outward = cout - cin;
  for (auto& t : tris) {
    const Vec3 a = midpoint(p, t[0]), b = midpoint(p, t[1]), c = midpoint(p, t[2]);
    if ((b - a).cross(c - a).dot(outward) < 0.0) std::swap(t[1], t[2]);
  }
  return tris;
}

MtResult extract_surface(const TetGrid& tet) {
  MtResult res;
  const int n = tet.resolution();
  const double iso = tet.iso();
  const auto& tets = cube_tetrahedra();
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  const std::uint64_t nv = tet.vertex_count();
  auto vertex_for = [&](std::uint32_t a, std::uint32_t b, double la, double lb) {
    const std::uint64_t key = std::min(a, b) * nv + std::max(a, b);
    auto it = lookup.find(key);
    if (it != lookup.end()) return it->second;
    const double t = la / (la - lb);
    const Vec3 pa = tet.position(a);
    res.mesh.vertices.push_back(pa + t * (tet.position(b) - pa));
    res.sources.push_back({a, b, t});
    const auto idx = static_cast<std::uint32_t>(res.sources.size() - 1);
    lookup.emplace(key, idx);
    return idx;
  };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<std::uint32_t, 8> vid;
        std::array<double, 8> lv;
        int inside = 0;
        for (int b = 0; b < 8; ++b) {
          vid[b] = static_cast<std::uint32_t>(tet.vertex_index(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)));
          lv[b] = tet.sdf(vid[b]) + iso;
          inside += lv[b] < 0.0 ? 1 : 0;
        }
        if (inside == 0 || inside == 8) continue;
        for (const auto& corners : tets) {
          std::array<Vec3, 4> p;
          std::array<double, 4> l;
          for (int c = 0; c < 4; ++c) {
            p[c] = tet.lattice_position(vid[corners[c]]);
            l[c] = lv[corners[c]];
          }
          for (const auto& tri : tetrahedron_triangles(p, l)) {
            Face f;
            for (int e = 0; e < 3; ++e) {
              const int a = corners[tri[e].inside], b = corners[tri[e].outside];
              f[e] = vertex_for(vid[a], vid[b], lv[a], lv[b]);
            }
            res.mesh.faces.push_back(f);
          }
        }
      }
  res.mesh.compute_normals();
  return res;
}

TriangleMesh marching_tetrahedra(const TetGrid& tet) { return extract_surface(tet).mesh; }

void marching_tetrahedra_backward(const TetGrid& tet, const MtResult& res, std::span<const Vec3> vertex_grad,
                                  std::span<double> grad) {
  const double iso = tet.iso();
  for (std::size_t v = 0; v < res.sources.size(); ++v) {
    const Vec3& g = vertex_grad[v];
    if (g.isZero(0.0)) continue;
    const auto& s = res.sources[v];
    const double la = tet.sdf(s.a) + iso, lb = tet.sdf(s.b) + iso;
    const double denom = (la - lb) * (la - lb);
    const Vec3 d = tet.position(s.b) - tet.position(s.a);
    const double gd = g.dot(d);
    grad[TetGrid::sdf_index(s.a)] += gd * (-lb / denom);
    grad[TetGrid::sdf_index(s.b)] += gd * (la / denom);
    for (int ax = 0; ax < 3; ++ax) {
      grad[tet.offset_index(s.a, ax)] += (1.0 - s.t) * g[ax];
      grad[tet.offset_index(s.b, ax)] += s.t * g[ax];
    }
  }
}

}  // namespace touchrecon
