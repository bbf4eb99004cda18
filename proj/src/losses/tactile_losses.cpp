#include "touchrecon/losses/tactile_losses.hpp"

#include <algorithm>
#include <cmath>

namespace touchrecon {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

DepthNormalResult depth_normal_loss(const GridSDF& field, std::span<const RaySample> samples,
                                    std::span<const RayRender> predictions, double w_depth, double w_normal,
                                    std::span<double> grad) {
  if (samples.empty()) throw InputError("depth/normal loss needs at least one ray");
  if (samples.size() != predictions.size()) throw InputError("one prediction per ray sample is required");
  DepthNormalResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) out.degenerate += predictions[i].hit && predictions[i].degenerate;
  out.rays = samples.size() - out.degenerate;
  if (out.rays == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.rays);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RaySample& s = samples[i];
    const RayRender& p = predictions[i];
    if (p.hit && p.degenerate) continue;
    if (!p.hit) {
      ++out.misses;
      const Vec3 x = s.ray.at(s.d);
      const double f = field.value(x);
      if (f > 0.0) {
        out.depth += f * inv;
        if (w_depth > 0.0) field_value_backward(field, x, w_depth * inv, grad);
      }
      continue;
    }
    const double e = p.depth - s.d;
    const Vec3 dn = p.normal - s.n;
    out.depth += std::abs(e) * inv;
    out.normal += dn.cwiseAbs().sum() * inv;
    const double gd = w_depth * sign(e) * inv;
    const Vec3 gn = w_normal * inv * Vec3(sign(dn.x()), sign(dn.y()), sign(dn.z()));
    if (gd != 0.0 || !gn.isZero(0.0)) render_ray_backward(field, s.ray, p, gd, gn, grad);
  }
  return out;
}

SampledLoss sdf_loss(const GridSDF& field, std::span<const RaySample> samples, double delta, int per_ray, Rng& rng,
                     double weight, std::span<double> grad) {
  SampledLoss out;
  if (samples.empty()) return out;
  const double inv = 1.0 / (static_cast<double>(samples.size()) * per_ray);
  for (const RaySample& r : samples) {
    for (int k = 0; k < per_ray; ++k) {
      const double s = r.d - delta + 2.0 * delta * (k + rng.uniform()) / per_ray;
      const Vec3 x = r.ray.at(s);
      const double e = field.value(x) - (r.d - s);
      out.value += std::abs(e) * inv;
      if (weight > 0.0 && e != 0.0) field_value_backward(field, x, weight * sign(e) * inv, grad);
    }
  }
  out.samples = samples.size() * per_ray;
  return out;
}

SampledLoss freespace_loss(const GridSDF& field, std::span<const RaySample> samples, double delta, int per_ray,
                           Rng& rng, double weight, std::span<double> grad) {
  SampledLoss out;
  std::size_t rays = 0;
  for (const RaySample& r : samples) rays += r.d > delta;
  if (rays == 0) return out;
  const double inv = 1.0 / (static_cast<double>(rays) * per_ray);
  for (const RaySample& r : samples) {
    if (!(r.d > delta)) continue;
    const double len = r.d - delta;
    for (int k = 0; k < per_ray; ++k) {
      const Vec3 x = r.ray.at(len * (k + rng.uniform()) / per_ray);
      const double h = delta - field.value(x);
      if (h <= 0.0) continue;
      out.value += h * h * inv;
      if (weight > 0.0) field_value_backward(field, x, -2.0 * h * weight * inv, grad);
    }
  }
  out.samples = rays * per_ray;
  return out;
}

SampledLoss eikonal_loss(const GridSDF& field, int points, Rng& rng, double weight, std::span<double> grad) {
  if (points < 1) throw InputError("eikonal loss needs at least one point");
  SampledLoss out;
  const double inv = 1.0 / points;
  FieldStencil st;
  for (int i = 0; i < points; ++i) {
    const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    field.stencil(x, st);
    const double g = st.grad.norm();
    out.value += (g - 1.0) * (g - 1.0) * inv;
    if (weight <= 0.0 || g == 0.0) continue;
    const Vec3 c = (2.0 * weight * inv * (g - 1.0) / g) * st.grad;
    for (int j = 0; j < st.count; ++j) grad[st.index[j]] += c.dot(st.dweight[j]);
  }
  out.samples = static_cast<std::size_t>(points);
  return out;
}

}  // namespace touchrecon
