#include "fixtures.hpp"

#include "touchrecon/common/rng.hpp"
#include "touchrecon/geometry/mesh_io.hpp"
#include "touchrecon/geometry/pose.hpp"
#include "touchrecon/geometry/primitives.hpp"
#include "touchrecon/geometry/ray_caster.hpp"
#include "touchrecon/geometry/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace touchrecon;

namespace {

Ray random_ray(Rng& rng, double spread) {
  Ray r;
  r.origin = rng.unit_vector() * rng.uniform(1.5, 3.0);
  const Vec3 target = Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
  r.direction = (target - r.origin).normalized();
  return r;
}

void check_caster_matches_brute_force(const TriangleMesh& mesh, int rays, std::uint64_t seed) {
  RayCaster caster(mesh);
  Rng rng(seed);
  int hits = 0;
  for (int i = 0; i < rays; ++i) {
    const Ray r = random_ray(rng, 1.0);
    const auto a = caster.cast(r);
    const auto b = caster.cast_brute_force(r);
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    ++hits;
    CHECK(a->face == b->face);
    CHECK(a->t == b->t);
  }
  CHECK(hits > rays / 10);
}

}  // namespace

TEST_CASE("pose from z axis is a proper rotation") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 z = rng.unit_vector();
    const Pose p = Pose::from_z_axis(z, Vec3(1, 2, 3));
    CHECK_NOTHROW(p.validate());
    CHECK((p.z_axis() - z).norm() < 1e-12);
    const Pose q = Pose::from_array(p.to_array());
    CHECK(q.rotation == p.rotation);
    CHECK(((p * p.inverse()).rotation - Mat3::Identity()).norm() < 1e-12);
  }
  const Pose up = Pose::from_z_axis(Vec3::UnitZ(), Vec3::Zero());
  CHECK_NOTHROW(up.validate());
}

TEST_CASE("primitives are closed and consistently oriented") {
  for (const auto& mesh : {make_icosphere(3, 1.0), make_box(Vec3(0.8, 0.8, 0.8), 8), make_cylinder(0.3, 0.8, 48, 8, 4)}) {
    const auto topo = analyze_topology(mesh);
    CHECK(topo.watertight());
    CHECK(topo.oriented());
    CHECK(topo.euler_characteristic == 2);
    // Outward orientation: signed volume positive.
    double vol = 0.0;
    for (const auto& f : mesh.faces)
      vol += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]])) / 6.0;
    CHECK(vol > 0.0);
    for (const auto& n : mesh.normals) CHECK(std::abs(n.norm() - 1.0) < 1e-6);
  }
  CHECK(make_icosphere(3).faces.size() == 1280);
}

TEST_CASE("normalization fits the longest axis to [-0.9, 0.9]") {
  TriangleMesh m = make_box(Vec3(2.0, 4.0, 1.0), 2);
  transform_mesh(m, 1.0, Vec3(5, -3, 2));
  normalize_mesh(m);
  const Aabb b = bounds(m);
  CHECK(b.min.y() == doctest::Approx(-0.9));
  CHECK(b.max.y() == doctest::Approx(0.9));
  CHECK(b.max.x() == doctest::Approx(0.45));
}

TEST_CASE("ray caster matches exhaustive intersection") {
  check_caster_matches_brute_force(make_icosphere(3, 1.0), 100000, 11);
  check_caster_matches_brute_force(make_box(Vec3(0.8, 0.8, 0.8), 16), 10000, 12);
  check_caster_matches_brute_force(make_cylinder(0.3, 0.8), 10000, 13);
}

TEST_CASE("ray caster basic queries") {
  const RayCaster sphere(make_icosphere(3, 1.0));
  Ray r;
  r.origin = Vec3(0, 0, -2);
  r.direction = Vec3::UnitZ();
  auto hit = sphere.cast(r);
  REQUIRE(hit);
  // Facet error of a subdivision-3 icosphere is below 1.5%.
  CHECK(hit->t == doctest::Approx(1.0).epsilon(0.015));
  CHECK(hit->front_facing);
  CHECK(hit->normal.dot(r.direction) < 0.0);
  CHECK(std::abs(hit->normal.norm() - 1.0) < 1e-12);

  Ray miss;
  miss.origin = Vec3(5, 5, -2);
  miss.direction = Vec3::UnitZ();
  CHECK_FALSE(sphere.cast(miss));

  Ray cut = r;
  cut.t_min = 3.5;  // beyond both crossings
  CHECK_FALSE(sphere.cast(cut));
  cut.t_min = 2.0;  // only the exit crossing remains, seen from inside
  hit = sphere.cast(cut);
  REQUIRE(hit);
  CHECK_FALSE(hit->front_facing);
  CHECK(hit->normal.dot(r.direction) < 0.0);

  CHECK_THROWS_AS(RayCaster(TriangleMesh{}), InputError);
  const RayCaster tri(make_triangle(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)));
  CHECK(tri.leaf_count() == 1);
  CHECK(tri.node_count() == 1);
}

TEST_CASE("anchored casting is exactly translation equivariant") {
  // Coordinates on a 2^-24 lattice and a dyadic shift keep every difference exact.
  TriangleMesh mesh = make_icosphere(3, 0.5);
  for (auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) v[a] = std::ldexp(std::round(std::ldexp(v[a], 24)), -24);
  TriangleMesh moved = mesh;
  const Vec3 shift(0.25, -0.5, 0.125);
  for (auto& v : moved.vertices) v += shift;
  const RayCaster a(mesh), b(moved);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 anchor = rng.unit_vector() * 0.75;
    Vec3 q;
    for (int k = 0; k < 3; ++k) q[k] = std::ldexp(std::round(std::ldexp(anchor[k], 24)), -24);
    Ray r;
    r.origin = Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0.0);
    r.direction = (-q + Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0)).normalized();
    const auto ha = a.cast(r, q);
    const auto hb = b.cast(r, q + shift);
    REQUIRE(ha.has_value() == hb.has_value());
    if (ha) {
      CHECK(ha->t == hb->t);
      CHECK(ha->face == hb->face);
    }
  }
}

TEST_CASE("poisson disk sampling respects the minimum distance") {
  const TriangleMesh sphere = make_icosphere(4, 1.0);
  const auto res = poisson_disk_sample(sphere, 0.3, 30, 2.0, 7);
  CHECK(res.target == 60);
  CHECK(res.points.size() == 60);
  CHECK_FALSE(res.exhausted);
  for (std::size_t i = 0; i < res.points.size(); ++i)
    for (std::size_t j = i + 1; j < res.points.size(); ++j)
      CHECK((res.points[i].position - res.points[j].position).norm() >= 0.3);

  const auto again = poisson_disk_sample(sphere, 0.3, 30, 2.0, 7);
  REQUIRE(again.points.size() == res.points.size());
  for (std::size_t i = 0; i < res.points.size(); ++i) CHECK(again.points[i].position == res.points[i].position);

  const auto single = poisson_disk_sample(make_triangle(Vec3(0, 0, 0), Vec3(0.01, 0, 0), Vec3(0, 0.01, 0)), 10.0, 5, 1.0, 1);
  CHECK(single.points.size() == 1);
  CHECK(single.exhausted);
  CHECK_THROWS_AS(poisson_disk_sample(sphere, 0.0, 5, 1.0, 1), InputError);
}

TEST_CASE("surface samples are area uniform and lie on their faces") {
  const TriangleMesh box = make_box(Vec3(1.0, 2.0, 3.0), 2);
  const std::size_t n = 60000;
  const auto pts = sample_surface(box, n, 99);
  REQUIRE(pts.size() == n);
  const double total = surface_area(box);
  std::vector<std::size_t> counts(box.faces.size(), 0);
  for (const auto& p : pts) {
    ++counts[p.face];
    const auto& f = box.faces[p.face];
    const Vec3 a = box.vertices[f[0]], e1 = box.vertices[f[1]] - a, e2 = box.vertices[f[2]] - a;
    // Least-squares barycentrics; the residual measures distance to the face plane.
    Eigen::Matrix<double, 3, 2> m;
    m << e1, e2;
    const Vec2 uv = m.colPivHouseholderQr().solve(p.position - a);
    CHECK((a + m * uv - p.position).norm() < 1e-9);
    CHECK(uv.minCoeff() >= -1e-9);
    CHECK(uv.sum() <= 1.0 + 1e-9);
  }
  for (std::size_t f = 0; f < box.faces.size(); ++f) {
    const double prob = box.face_area(f) / total;
    const double sigma = std::sqrt(n * prob * (1.0 - prob));
    CHECK(std::abs(counts[f] - n * prob) < 3.0 * sigma);
  }
  CHECK(sample_surface_points(box, 1, 5).size() == 1);
  CHECK(sample_surface_points(box, 100, 5) == sample_surface_points(box, 100, 5));
  CHECK_THROWS_AS(sample_surface_points(TriangleMesh{}, 10, 1), InputError);
}

TEST_CASE("mesh files round trip") {
  const auto dir = test::scratch_dir("mesh_io");
  const TriangleMesh mesh = make_icosphere(2, 0.7);
  for (const char* name : {"/m.obj", "/m.ply"}) {
    save_mesh(dir + name, mesh);
    const TriangleMesh back = load_mesh(dir + name);
    REQUIRE(back.vertices.size() == mesh.vertices.size());
    CHECK(back.faces == mesh.faces);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) CHECK(back.vertices[i] == mesh.vertices[i]);
  }
  {
    std::ofstream out(dir + "/ascii.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
           "element face 2\nproperty list uchar int vertex_indices\nend_header\n"
           "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n3 0 1 1\n";
  }
  const TriangleMesh quad = load_mesh(dir + "/ascii.ply");
  CHECK(quad.faces.size() == 2);  // quad fanned, degenerate triangle dropped
  {
    std::ofstream out(dir + "/degenerate.obj");
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n";
  }
  CHECK(load_mesh(dir + "/degenerate.obj").faces.size() == 1);
  CHECK_THROWS_AS(load_mesh(dir + "/missing.obj"), InputError);

  const std::vector<Vec3> cloud = {Vec3(1, 2, 3), Vec3(-1, 0.5, 2)};
  write_point_cloud(dir + "/cloud.ply", cloud);
  CHECK(read_point_cloud(dir + "/cloud.ply") == cloud);
}
