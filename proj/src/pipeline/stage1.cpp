#include "touchrecon/pipeline/stage1.hpp"
#include "touchrecon/common/log.hpp"
#include "touchrecon/common/parallel.hpp"
#include "touchrecon/field/marching_tetrahedra.hpp"
#include "touchrecon/losses/tactile_losses.hpp"
#include "touchrecon/pipeline/checkpoint.hpp"
#include "touchrecon/render/field_render.hpp"

#include <cmath>

namespace touchrecon {

namespace {

// Stream keys for Rng::derive; each step draws from its own generators so a
// resumed run replays the same batches.
constexpr std::uint64_t kRayStream = 1;
constexpr std::uint64_t kSdsStream = 2;

void maybe_checkpoint(const PipelineConfig& config, const Stage1State& state, const TrainControl& control) {
  if (control.checkpoint_path.empty()) return;
  Checkpoint c;
  c.config_text = config_to_text(config);
  c.stage = 1;
  c.stage1 = state;
  save_checkpoint(control.checkpoint_path, c);
}

}  // namespace

double sds_pixel_weight(double weight, std::span<const ViewCamera> views) {
  std::size_t pixels = 0;
  for (const auto& v : views) pixels += static_cast<std::size_t>(v.width) * v.height;
  return pixels == 0 ? 0.0 : weight / static_cast<double>(pixels);
}

Stage1State stage1_init(const PipelineConfig& config) {
  config.validate();
  Stage1State s;
  s.field = GridSDF(config.stage1.levels);
  s.field.init_sphere(config.stage1.init_radius);
  unlock_level(s.field, 0, config.stage1.unlock);
  s.adam = Adam(s.field.param_count());
  return s;
}

double stage1_learning_rate(const Stage1Config& c, int step) {
  if (c.total_steps <= 0) return c.learning_rate;
  const double u = std::clamp(static_cast<double>(step) / c.total_steps, 0.0, 1.0);
  return c.learning_rate * std::pow(c.lr_final_factor, u);
}

bool stage1_sds_active(const Stage1Config& c, int step) {
  if (step < c.warmup_steps) return false;
  return !c.alternate_sds || (step - c.warmup_steps) % 2 == 0;
}

bool stage1_tactile_active(const Stage1Config& c, int step) {
  return step < c.warmup_steps || !c.alternate_sds || (step - c.warmup_steps) % 2 == 1;
}

std::uint64_t stage1_expected_requests(const Stage1Config& c, int steps) {
  std::uint64_t n = 0;
  for (int s = 0; s < std::min(steps, c.total_steps); ++s)
    if (stage1_sds_active(c, s)) n += c.sds_batch;
  return n;
}

void stage1_train(const PipelineConfig& config, const TouchData& touches, GuidanceBackend& backend, Stage1State& state,
                  const TrainControl& control) {
  config.validate();
  const Stage1Config& c = config.stage1;
  const LossWeights& w = c.weights;
  if (touches.rays.empty()) throw InputError("stage 1 needs at least one observation");
  if (state.field.param_count() != state.adam.size()) throw InputError("stage 1 state: optimizer size mismatch");

  RenderOptions render;
  render.samples = c.samples_per_ray;
  const int eikonal_points = c.eikonal_points > 0 ? c.eikonal_points : std::max(1, c.ray_batch / 4);
  const int end = control.stop_at >= 0 ? std::min(control.stop_at, c.total_steps) : c.total_steps;
  std::vector<double> grad(state.field.param_count());

  for (; state.step < end; ++state.step) {
    const int step = state.step;
    unlock_level(state.field, step, c.unlock);
    std::fill(grad.begin(), grad.end(), 0.0);
    Rng rng = Rng::derive(config.seed, kRayStream, static_cast<std::uint64_t>(step));
    const FieldBounds bounds(state.field, c.bounds_resolution);
    nlohmann::json rec = {{"stage", 1}, {"step", step}};

    if (stage1_tactile_active(c, step)) {
      const auto batch = sample_ray_batch(touches, c.ray_batch, rng);
      std::vector<RayRender> preds(batch.size());
      parallel_for(static_cast<std::ptrdiff_t>(batch.size()),
                   [&](std::ptrdiff_t i) { preds[i] = render_ray(state.field, batch[i].ray, &bounds, render); });
      const double w_normal = w.normal.at(step);
      const auto dn = depth_normal_loss(state.field, batch, preds, w.depth, w_normal, grad);
      const auto sdf = sdf_loss(state.field, batch, w.delta, w.band_samples, rng, w.sdf, grad);
      const auto fs = freespace_loss(state.field, batch, w.delta, w.freespace_samples, rng, w.freespace, grad);
      const double tactile = dn.depth + dn.normal;
      state.tactile_average = step == 0 ? tactile : 0.99 * state.tactile_average + 0.01 * tactile;
      rec["depth"] = dn.depth;
      rec["normal"] = dn.normal;
      rec["w_normal"] = w_normal;
      rec["misses"] = dn.misses;
      rec["sdf"] = sdf.value;
      rec["freespace"] = fs.value;
    }
    const auto eik = eikonal_loss(state.field, eikonal_points, rng, w.eikonal, grad);
    rec["eikonal"] = eik.value;

    if (stage1_sds_active(c, step)) {
      Rng view_rng = Rng::derive(config.seed, kSdsStream, static_cast<std::uint64_t>(step));
      const auto views =
          sample_views(view_rng, c.sds_batch, config.view_radius, config.view_fov_deg, c.sds_resolution, c.sds_resolution);
      const auto rep = sds_field_step(state.field, &bounds, views, backend, config.sds, state.next_request_id,
                                      view_rng.next_u64(), sds_pixel_weight(w.sds, views), grad);
      state.sds_requests += rep.requests;
      state.sds_failures += rep.failures;
      rec["sds_requests"] = rep.requests;
      rec["sds_failures"] = rep.failures;
      rec["sds_gradient_norm"] = rep.gradient_norm;
      if (state.sds_failures > static_cast<std::uint64_t>(config.max_guidance_failures)) {
        maybe_checkpoint(config, state, control);
        throw GuidanceAbort("stage 1: " + std::to_string(state.sds_failures) +
                                " guidance failures exceed the budget of " +
                                std::to_string(config.max_guidance_failures),
                            step);
      }
    }

    const double lr = stage1_learning_rate(c, step);
    state.adam.step(state.field.params(), grad, lr);
    rec["lr"] = lr;
    rec["active_levels"] = state.field.active_levels();
    if (control.report) control.report(rec);
    if (control.checkpoint_every > 0 && (step + 1) % control.checkpoint_every == 0) {
      ++state.step;
      maybe_checkpoint(config, state, control);
      --state.step;
    }
  }
}

TriangleMesh extract_field_mesh(const GridSDF& field, int resolution, double iso) {
  TriangleMesh m = marching_tetrahedra(init_tet_from_field(field, resolution, iso));
  m.compute_normals();
  return m;
}

}  // namespace touchrecon
