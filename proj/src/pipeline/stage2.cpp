#include "touchrecon/pipeline/stage2.hpp"
#include "touchrecon/common/log.hpp"
#include "touchrecon/field/marching_tetrahedra.hpp"
#include "touchrecon/losses/mesh_losses.hpp"
#include "touchrecon/pipeline/checkpoint.hpp"

#include <numeric>

namespace touchrecon {

namespace {

constexpr std::uint64_t kTouchStream = 3;
constexpr std::uint64_t kViewStream = 4;

void maybe_checkpoint(const PipelineConfig& config, const Stage2State& state, const TrainControl& control) {
  if (control.checkpoint_path.empty()) return;
  Checkpoint c;
  c.config_text = config_to_text(config);
  c.stage = 2;
  c.stage2 = state;
  save_checkpoint(control.checkpoint_path, c);
}

// Surface at the current iso; falls back to iso 0 once when it is empty.
MtResult surface_or_fallback(Stage2State& state) {
  MtResult r = extract_surface(state.tet);
  if (!r.mesh.empty()) return r;
  if (state.tet.iso() != 0.0) {
    log().warn("stage 2: mesh empty at iso {}, falling back to iso 0", state.tet.iso());
    state.tet.set_iso(0.0);
    state.iso_fallback = true;
    r = extract_surface(state.tet);
    if (!r.mesh.empty()) return r;
  }
  throw Error("stage 2: the extracted mesh is empty at step " + std::to_string(state.step));
}

std::vector<RaySample> touch_batch(const TouchData& touches, int count, int rays_per_touch, Rng& rng) {
  std::vector<std::size_t> order(touches.touch_count());
  std::iota(order.begin(), order.end(), 0);
  std::vector<RaySample> out;
  for (int i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.index(order.size() - i)]);
    const auto rays = touches.touch_rays(order[i]);
    if (rays.empty()) continue;
    for (int k = 0; k < rays_per_touch; ++k) out.push_back(rays[rng.index(rays.size())]);
  }
  return out;
}

}  // namespace

Stage2State stage2_init(const PipelineConfig& config, const GridSDF& field) {
  config.validate();
  Stage2State s;
  s.tet = init_tet_from_field(field, config.stage2.tet_resolution, config.stage2.iso);
  s.adam = Adam(s.tet.params().size());
  return s;
}

Stage2State stage2_init(const PipelineConfig& config, const Stage1State& stage1) {
  Stage2State s = stage2_init(config, stage1.field);
  s.next_request_id = stage1.next_request_id;
  return s;
}

void stage2_refine(const PipelineConfig& config, const TouchData& touches, GuidanceBackend& backend, Stage2State& state,
                   const TrainControl& control) {
  config.validate();
  const Stage2Config& c = config.stage2;
  const LossWeights& w = c.weights;
  if (touches.touch_count() == 0) throw InputError("stage 2 needs at least one observation");
  if (state.tet.params().size() != state.adam.size()) throw InputError("stage 2 state: optimizer size mismatch");
  const int obs_batch = observation_batch(config, touches.touch_count());
  const int end = control.stop_at >= 0 ? std::min(control.stop_at, c.steps) : c.steps;
  std::vector<double> grad(state.tet.params().size());

  for (; state.step < end; ++state.step) {
    const int step = state.step;
    MtResult surface = surface_or_fallback(state);
    surface.mesh.compute_normals();
    std::vector<Vec3> position_grad(surface.mesh.vertices.size(), Vec3::Zero());
    nlohmann::json rec = {{"stage", 2}, {"step", step}, {"faces", surface.mesh.faces.size()}};

    Rng rng = Rng::derive(config.seed, kTouchStream, static_cast<std::uint64_t>(step));
    const auto batch = touch_batch(touches, obs_batch, c.rays_per_touch, rng);
    const RayCaster caster(surface.mesh);
    const auto dn = mesh_depth_normal_loss(surface.mesh, caster, batch, w.depth, w.normal.at(step), position_grad);
    rec["depth"] = dn.depth;
    rec["normal"] = dn.normal;
    rec["misses"] = dn.misses;

    Rng view_rng = Rng::derive(config.seed, kViewStream, static_cast<std::uint64_t>(step));
    const auto views =
        sample_views(view_rng, c.sds_batch, config.view_radius, config.view_fov_deg, c.sds_resolution, c.sds_resolution);
    const auto rep = sds_mesh_step(surface.mesh, views, backend, config.sds, state.next_request_id,
                                   view_rng.next_u64(), sds_pixel_weight(w.sds, views), position_grad);
    state.sds_requests += rep.requests;
    state.sds_failures += rep.failures;
    rec["sds_requests"] = rep.requests;
    rec["sds_failures"] = rep.failures;
    rec["sds_gradient_norm"] = rep.gradient_norm;
    if (state.sds_failures > static_cast<std::uint64_t>(config.max_guidance_failures)) {
      maybe_checkpoint(config, state, control);
      throw GuidanceAbort("stage 2: " + std::to_string(state.sds_failures) + " guidance failures exceed the budget of " +
                              std::to_string(config.max_guidance_failures),
                          step);
    }

    const auto nc = normal_consistency_loss(surface.mesh, w.normal_consistency, position_grad);
    rec["normal_consistency"] = nc.value;

    std::fill(grad.begin(), grad.end(), 0.0);
    marching_tetrahedra_backward(state.tet, surface, position_grad, grad);
    state.adam.step(state.tet.params(), grad, c.learning_rate);
    state.tet.clamp_offsets();
    rec["iso"] = state.tet.iso();
    if (control.report) control.report(rec);
    if (control.checkpoint_every > 0 && (step + 1) % control.checkpoint_every == 0) {
      ++state.step;
      maybe_checkpoint(config, state, control);
      --state.step;
    }
  }
}

TriangleMesh stage2_mesh(const Stage2State& state) {
  Stage2State s = state;
  TriangleMesh m = surface_or_fallback(s).mesh;
  m.compute_normals();
  return m;
}

}  // namespace touchrecon
