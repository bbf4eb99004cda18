#include "touchrecon/touchsim/planner.hpp"

#include "touchrecon/common/log.hpp"
#include "touchrecon/geometry/sampling.hpp"
#include "touchrecon/touchsim/contact.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <optional>

namespace touchrecon {
namespace {

// Mean front-facing normal over the central patch of pixels, plus the hit
// point of the pixel nearest the center.
struct PatchProbe {
  Vec3 normal;
  Vec3 center;
};

std::optional<PatchProbe> probe_patch(const RayCaster& caster, const Pose& pose, const SensorSpec& spec, int patch) {
  const int r0 = spec.height_px / 2 - patch / 2, c0 = spec.width_px / 2 - patch / 2;
  Vec3 sum = Vec3::Zero();
  int hits = 0;
  std::optional<Vec3> center;
  double best = std::numeric_limits<double>::infinity();
  for (int r = r0; r < r0 + patch; ++r)
    for (int c = c0; c < c0 + patch; ++c) {
      const Vec2 px = spec.pixel_center(r, c);
      Ray ray;
      ray.origin = pose.apply(Vec3(px.x(), px.y(), 0.0));
      ray.direction = pose.z_axis();
      const auto hit = caster.cast(ray);
      if (!hit || !hit->front_facing) continue;
      sum += hit->normal;
      ++hits;
      if (px.squaredNorm() < best) {
        best = px.squaredNorm();
        center = hit->point;
      }
    }
  if (hits == 0 || sum.norm() == 0.0) return std::nullopt;
  return PatchProbe{sum.normalized(), *center};
}

// Nearest front-facing hit distance over every pixel ray.
std::optional<double> first_contact(const RayCaster& caster, const Pose& pose, const SensorSpec& spec) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < spec.height_px; ++r)
    for (int c = 0; c < spec.width_px; ++c) {
      const Vec2 px = spec.pixel_center(r, c);
      Ray ray;
      ray.origin = Vec3(px.x(), px.y(), 0.0);
      ray.origin = pose.rotation * ray.origin;
      ray.direction = pose.z_axis();
      ray.t_max = best;
      const auto hit = caster.cast(ray, pose.translation);
      if (hit && hit->front_facing) best = std::min(best, hit->t);
    }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

}  // namespace

std::vector<PlannedTouch> plan_and_render(const RayCaster& caster, int k, const SensorSpec& spec, std::uint64_t seed,
                                          const PlannerOptions& options) {
  if (k < 1) throw InputError("touch count must be at least 1");
  spec.validate();
  const TriangleMesh& mesh = caster.mesh();
  double bounding_radius = 0.0;
  for (const auto& v : mesh.vertices) bounding_radius = std::max(bounding_radius, v.norm());
  const double retract = options.retract_factor * bounding_radius;
  const double radius = options.poisson_radius > 0.0
                            ? options.poisson_radius
                            : default_poisson_radius(mesh, static_cast<std::size_t>(
                                                               std::ceil(k * options.oversample_factor)));
  const auto pool = poisson_disk_sample(mesh, radius, static_cast<std::size_t>(k), options.oversample_factor, seed);
  if (pool.exhausted)
    log().warn("poisson pool has {} of {} candidates (radius {})", pool.points.size(), pool.target, radius);

  std::vector<PlannedTouch> touches;
  for (const auto& cand : pool.points) {
    if (static_cast<int>(touches.size()) == k) break;
    const double rn = cand.position.norm();
    const Vec3 radial = rn > 1e-12 ? Vec3(cand.position / rn) : cand.normal;
    // Approach along the radial direction, then align with the surface.
    const Pose approach = Pose::from_z_axis(-radial, cand.position + retract * radial);
    auto probe = probe_patch(caster, approach, spec, options.normal_patch);
    if (!probe) continue;
    // Re-probe from the aligned pose until the patch normal settles; near
    // edges and corners it keeps jumping and the candidate is dropped.
    Pose aligned;
    bool settled = false;
    for (int iter = 0; iter < 4 && probe; ++iter) {
      aligned = Pose::from_z_axis(-probe->normal, probe->center + retract * probe->normal);
      auto next = probe_patch(caster, aligned, spec, options.normal_patch);
      if (next && next->normal.dot(probe->normal) > std::cos(2.0 * std::numbers::pi / 180.0)) {
        settled = true;
        break;
      }
      probe = next;
    }
    if (!settled) continue;
    const auto contact = first_contact(caster, aligned, spec);
    if (!contact) continue;
    aligned.translation += (*contact + spec.press_depth) * aligned.z_axis();
    auto obs = render_contact(caster, aligned, spec, static_cast<int>(touches.size()));
    if (!obs) continue;
    touches.push_back({aligned, std::move(*obs)});
  }
  if (static_cast<int>(touches.size()) < k)
    throw PlannerError(fmt::format("touch planning exhausted its candidate pool: {} of {} touches achieved",
                                   touches.size(), k),
                       touches.size());
  return touches;
}

std::vector<Pose> plan_touches(const TriangleMesh& mesh, int k, const SensorSpec& spec, std::uint64_t seed,
                               const PlannerOptions& options) {
  const RayCaster caster(mesh);
  std::vector<Pose> poses;
  for (auto& t : plan_and_render(caster, k, spec, seed, options)) poses.push_back(t.pose);
  return poses;
}

}  // namespace touchrecon
