#pragma once

#include "touchrecon/geometry/mesh.hpp"

namespace touchrecon {

// Closed, consistently oriented (outward) meshes centered at the origin.

TriangleMesh make_icosphere(int subdivisions, double radius = 1.0);

/// Axis-aligned ellipsoid from an icosphere scaled per axis.
TriangleMesh make_ellipsoid(int subdivisions, const Vec3& radii);

/// Box with the given full extents; each face is a `segments` x `segments` grid.
TriangleMesh make_box(const Vec3& extents, int segments = 16);

/// Cylinder along z with flat caps; caps are triangulated in concentric rings.
TriangleMesh make_cylinder(double radius, double height, int radial_segments = 96,
                           int height_segments = 24, int cap_rings = 12);

TriangleMesh make_triangle(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace touchrecon
