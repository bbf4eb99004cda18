#include "touchrecon/geometry/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace touchrecon {

TriangleMesh make_icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const auto a = midpoint(tri[0], tri[1]);
      const auto b = midpoint(tri[1], tri[2]);
      const auto c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriangleMesh m;
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(p * radius);
  m.faces = std::move(f);
  m.compute_normals();
  return m;
}

TriangleMesh make_ellipsoid(int subdivisions, const Vec3& radii) {
  TriangleMesh m = make_icosphere(subdivisions, 1.0);
  for (auto& p : m.vertices) p = p.cwiseProduct(radii);
  m.compute_normals();
  return m;
}

TriangleMesh make_box(const Vec3& extents, int segments) {
  TriangleMesh m;
  const Vec3 h = 0.5 * extents;
  std::map<std::array<int, 3>, std::uint32_t> index;
  // Integer lattice keys make vertices on shared edges coincide exactly.
  auto vertex = [&](const std::array<int, 3>& k) {
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = -h[a] + extents[a] * static_cast<double>(k[a]) / segments;
    m.vertices.push_back(p);
    const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
    index.emplace(k, idx);
    return idx;
  };
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, w = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      for (int i = 0; i < segments; ++i)
        for (int j = 0; j < segments; ++j) {
          auto key = [&](int a, int b) {
            std::array<int, 3> k{};
            k[axis] = side * segments;
            k[u] = a;
            k[w] = b;
            return vertex(k);
          };
          const auto v00 = key(i, j), v10 = key(i + 1, j), v11 = key(i + 1, j + 1), v01 = key(i, j + 1);
          // (u, w, axis) is right-handed, so counter-clockwise in (u, w) faces +axis.
          if (side == 1) {
            m.faces.push_back({v00, v10, v11});
            m.faces.push_back({v00, v11, v01});
          } else {
            m.faces.push_back({v00, v11, v10});
            m.faces.push_back({v00, v01, v11});
          }
        }
    }
  }
  m.compute_normals();
  return m;
}

TriangleMesh make_cylinder(double radius, double height, int radial_segments, int height_segments,
                           int cap_rings) {
  TriangleMesh m;
  const double hz = 0.5 * height;
  const int n = radial_segments;
  auto ring_vertex = [&](double r, double z, int k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), z);
  };
  // Side rings 0..height_segments, then cap rings from the rim inward.
  for (int j = 0; j <= height_segments; ++j)
    for (int k = 0; k < n; ++k) ring_vertex(radius, -hz + height * j / height_segments, k);
  auto side = [&](int j, int k) { return static_cast<std::uint32_t>(j * n + (k % n)); };
  for (int j = 0; j < height_segments; ++j)
    for (int k = 0; k < n; ++k) {
      m.faces.push_back({side(j, k), side(j, k + 1), side(j + 1, k + 1)});
      m.faces.push_back({side(j, k), side(j + 1, k + 1), side(j + 1, k)});
    }
  for (int cap = 0; cap < 2; ++cap) {
    const double z = cap == 0 ? -hz : hz;
    const int rim = cap == 0 ? 0 : height_segments;
    std::vector<std::uint32_t> prev(n);
    for (int k = 0; k < n; ++k) prev[k] = side(rim, k);
    for (int r = 1; r < cap_rings; ++r) {
      const double rr = radius * (1.0 - static_cast<double>(r) / cap_rings);
      std::vector<std::uint32_t> cur(n);
      for (int k = 0; k < n; ++k) {
        cur[k] = static_cast<std::uint32_t>(m.vertices.size());
        ring_vertex(rr, z, k);
      }
      for (int k = 0; k < n; ++k) {
        const int k1 = (k + 1) % n;
        if (cap == 1) {
          m.faces.push_back({prev[k], prev[k1], cur[k1]});
          m.faces.push_back({prev[k], cur[k1], cur[k]});
        } else {
          m.faces.push_back({prev[k], cur[k1], prev[k1]});
          m.faces.push_back({prev[k], cur[k], cur[k1]});
        }
      }
      prev = std::move(cur);
    }
    const auto center = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.emplace_back(0.0, 0.0, z);
    for (int k = 0; k < n; ++k) {
      const int k1 = (k + 1) % n;
      if (cap == 1)
        m.faces.push_back({prev[k], prev[k1], center});
      else
        m.faces.push_back({prev[k], center, prev[k1]});
    }
  }
  m.compute_normals();
  return m;
}

TriangleMesh make_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriangleMesh m;
  m.vertices = {a, b, c};
  m.faces = {{0, 1, 2}};
  m.compute_normals();
  return m;
}

}  // namespace touchrecon
