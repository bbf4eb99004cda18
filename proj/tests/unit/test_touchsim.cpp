#include "fixtures.hpp"

#include "touchrecon/geometry/primitives.hpp"
#include "touchrecon/touchsim/contact.hpp"
#include "touchrecon/touchsim/observation_io.hpp"
#include "touchrecon/touchsim/planner.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace touchrecon;

namespace {

constexpr double kRadius = 0.05;

// Sensor below the south pole of a sphere, gel plane pressed `press` past contact.
Pose south_pole_pose(double press) { return Pose::from_z_axis(Vec3::UnitZ(), Vec3(0, 0, -kRadius + press)); }

double analytic_cap(const SensorSpec& spec, int row, int col, double press) {
  const Vec2 c = spec.pixel_center(row, col);
  const double r2 = c.squaredNorm();
  if (r2 >= kRadius * kRadius) return 0.0;
  return std::clamp(press - (kRadius - std::sqrt(kRadius * kRadius - r2)), 0.0, spec.max_indentation);
}

// Inverse of erf by bisection.
double erfinv(double y) {
  double lo = 0.0, hi = 6.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erf(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("sensor spec validation") {
  SensorSpec spec;
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.pixel_pitch() == doctest::Approx(6.25e-5));
  spec.height_px = 200;
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = SensorSpec{};
  spec.press_depth = 0.003;
  CHECK_THROWS_AS(spec.validate(), InputError);
}

TEST_CASE("flat contact gives constant depth") {
  const RayCaster box(make_box(Vec3(0.04, 0.04, 0.04), 4));
  const SensorSpec spec;
  // Sensor above the +z face looking down, pressed 1 mm.
  const Pose pose = Pose::from_z_axis(-Vec3::UnitZ(), Vec3(0.001, -0.002, 0.02 - spec.press_depth));
  const auto obs = render_contact(box, pose, spec);
  REQUIRE(obs);
  CHECK(obs->contact_fraction() == 1.0);
  for (std::size_t i = 0; i < obs->depth.size(); ++i) CHECK(obs->depth[i] == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK_NOTHROW(obs->validate(spec));

  const Pose hover = Pose::from_z_axis(-Vec3::UnitZ(), Vec3(0, 0, 0.03));
  CHECK_FALSE(render_contact(box, hover, spec));
}

TEST_CASE("sphere contact matches the analytic cap") {
  const RayCaster sphere(make_icosphere(5, kRadius));
  const SensorSpec spec;
  const auto obs = render_contact(sphere, south_pole_pose(spec.press_depth), spec);
  REQUIRE(obs);
  double sq = 0.0, peak = 0.0;
  for (int r = 0; r < spec.height_px; ++r)
    for (int c = 0; c < spec.width_px; ++c) {
      const double e = obs->depth(r, c) - analytic_cap(spec, r, c, spec.press_depth);
      sq += e * e;
      peak = std::max(peak, obs->depth(r, c));
    }
  const double rms = std::sqrt(sq / static_cast<double>(obs->depth.size()));
  CHECK(rms < spec.pixel_pitch());
  // Inscribed facets sit at most a sagitta (~1e-5 m) inside the sphere.
  CHECK(peak == doctest::Approx(spec.press_depth).epsilon(0.02));
}

TEST_CASE("deeper presses never shrink the contact mask") {
  const RayCaster sphere(make_icosphere(4, kRadius));
  SensorSpec spec;
  Mask prev;
  for (double press : {0.0002, 0.0005, 0.001, 0.0015, 0.002}) {
    const auto obs = render_contact_raw(sphere, south_pole_pose(press), spec);
    if (!prev.empty())
      for (std::size_t i = 0; i < prev.size(); ++i)
        if (prev[i]) CHECK(obs.mask[i]);
    prev = obs.mask;
  }
}

TEST_CASE("contact rendering is translation equivariant") {
  TriangleMesh mesh = make_icosphere(4, kRadius);
  for (auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) v[a] = std::ldexp(std::round(std::ldexp(v[a], 30)), -30);
  TriangleMesh moved = mesh;
  const Vec3 shift(0.125, -0.25, 0.0625);
  for (auto& v : moved.vertices) v += shift;
  const SensorSpec spec;
  Pose pose = Pose::from_z_axis(Vec3(0.2, 0.1, 1.0).normalized(), Vec3::Zero());
  pose.translation = -pose.z_axis() * (kRadius - spec.press_depth);
  for (int a = 0; a < 3; ++a) pose.translation[a] = std::ldexp(std::round(std::ldexp(pose.translation[a], 30)), -30);
  Pose shifted = pose;
  shifted.translation += shift;
  const auto a = render_contact_raw(RayCaster(mesh), pose, spec);
  const auto b = render_contact_raw(RayCaster(moved), shifted, spec);
  CHECK(a.contact_fraction() > 0.05);
  CHECK(a.depth == b.depth);
  CHECK(a.mask == b.mask);
}

TEST_CASE("gel filter") {
  const RayCaster sphere(make_icosphere(4, kRadius));
  const SensorSpec spec;
  const auto obs = *render_contact(sphere, south_pole_pose(spec.press_depth), spec);
  const auto same = gel_filter(obs, 0.0);
  CHECK(same.depth == obs.depth);
  CHECK(same.mask == obs.mask);

  TactileObservation flat;
  flat.depth = Grid2<double>(64, 48, 7e-4);
  flat.mask = Mask(64, 48, 1);
  const auto blurred = gel_filter(flat, 3.0);
  for (std::size_t i = 0; i < blurred.depth.size(); ++i) CHECK(std::abs(blurred.depth[i] - 7e-4) < 1e-9);

  // Step edge along x; the 10-90% rise of a Gaussian step response spans
  // 2*sqrt(2)*erfinv(0.8)*sigma.
  const double sigma = 2.0;
  TactileObservation step;
  step.depth = Grid2<double>(80, 9, 0.0);
  step.mask = Mask(80, 9, 1);
  for (int r = 0; r < 9; ++r)
    for (int c = 40; c < 80; ++c) step.depth(r, c) = 1.0;
  const auto s = gel_filter(step, sigma);
  auto crossing = [&](double level) {
    for (int c = 0; c + 1 < 80; ++c) {
      const double a = s.depth(4, c), b = s.depth(4, c + 1);
      if (a < level && b >= level) return c + (level - a) / (b - a);
    }
    return -1.0;
  };
  const double width = crossing(0.9) - crossing(0.1);
  const double expected = 2.0 * std::sqrt(2.0) * erfinv(0.8) * sigma;
  CHECK(expected == doctest::Approx(2.563 * sigma).epsilon(1e-3));
  CHECK(width == doctest::Approx(expected).epsilon(0.05));
  CHECK_THROWS_AS(gel_filter(step, -1.0), InputError);
}

TEST_CASE("touch planning on a sphere") {
  const TriangleMesh sphere = make_icosphere(4, kRadius);
  const SensorSpec spec;
  const auto poses = plan_touches(sphere, 20, spec, 42);
  REQUIRE(poses.size() == 20);
  for (const auto& p : poses) {
    const Vec3 to_center = (-p.translation).normalized();
    const double angle = std::acos(std::clamp(p.z_axis().dot(to_center), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    CHECK(angle < 5.0);
    CHECK_NOTHROW(p.validate());
  }
  const auto again = plan_touches(sphere, 20, spec, 42);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(poses[i].rotation == again[i].rotation);
    CHECK(poses[i].translation == again[i].translation);
  }
  CHECK_THROWS_AS(plan_touches(sphere, 0, spec, 1), InputError);
}

TEST_CASE("touch planning on a plate is perpendicular") {
  const TriangleMesh plate = make_box(Vec3(0.1, 0.1, 0.0005), 4);
  const auto poses = plan_touches(plate, 1, SensorSpec{}, 3);
  REQUIRE(poses.size() == 1);
  CHECK(std::abs(std::abs(poses[0].z_axis().z()) - 1.0) < 1e-9);
}

TEST_CASE("planner reports the achieved count when the pool runs out") {
  const TriangleMesh sphere = make_icosphere(3, kRadius);
  PlannerOptions opts;
  opts.oversample_factor = 1.0;
  opts.poisson_radius = 0.08;  // only a handful of candidates fit
  try {
    plan_touches(sphere, 20, SensorSpec{}, 1, opts);
    FAIL("expected PlannerError");
  } catch (const PlannerError& e) {
    CHECK(e.achieved() < 20);
    CHECK(std::string(e.what()).find("of 20") != std::string::npos);
  }
}

TEST_CASE("observation directories round trip") {
  const RayCaster sphere(make_icosphere(4, kRadius));
  const SensorSpec spec;
  ObservationSet set;
  set.spec = spec;
  set.meters_per_unit = 0.1;
  set.observations.push_back(*render_contact(sphere, south_pole_pose(spec.press_depth), spec, 0));
  const auto dir = test::scratch_dir("obs_io");
  write_observation_set(dir, set);
  const auto back = read_observation_set(dir);
  REQUIRE(back.observations.size() == 1);
  const auto& a = set.observations[0];
  const auto& b = back.observations[0];
  CHECK(a.mask == b.mask);
  CHECK(a.sensor_pose.rotation == b.sensor_pose.rotation);
  CHECK(a.sensor_pose.translation == b.sensor_pose.translation);
  for (std::size_t i = 0; i < a.depth.size(); ++i)
    CHECK(b.depth[i] == doctest::Approx(a.depth[i]).epsilon(1e-6));
  CHECK(back.spec.width_px == spec.width_px);
}
