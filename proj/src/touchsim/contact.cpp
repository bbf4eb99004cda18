#include "touchrecon/touchsim/contact.hpp"

#include "touchrecon/common/parallel.hpp"

#include <cmath>

namespace touchrecon {

TactileObservation render_contact_raw(const RayCaster& caster, const Pose& pose, const SensorSpec& spec,
                                      int touch_id) {
  const int w = spec.width_px, h = spec.height_px;
  // Rays start this far behind the gel plane so that surface points up to the
  // clamp depth are reached from outside the object.
  const double back = 2.0 * spec.max_indentation;
  TactileObservation obs;
  obs.sensor_pose = pose;
  obs.touch_id = touch_id;
  obs.depth = Grid2<double>(w, h, 0.0);
  obs.mask = Mask(w, h, 0);
  const Vec3 dir = pose.z_axis();
  parallel_for(h, [&](std::ptrdiff_t row) {
    for (int col = 0; col < w; ++col) {
      const Vec2 c = spec.pixel_center(static_cast<int>(row), col);
      Ray ray;
      // Origin relative to the sensor position, which acts as the anchor.
      ray.origin = pose.rotation * Vec3(c.x(), c.y(), -back);
      ray.direction = dir;
      ray.t_max = back + spec.max_indentation;
      const auto hit = caster.cast(ray, pose.translation);
      double d = 0.0;
      if (hit) {
        if (!hit->front_facing)
          d = spec.max_indentation;  // ray started inside the object
        else if (hit->t < back)
          d = std::min(back - hit->t, spec.max_indentation);
      }
      obs.depth(static_cast<int>(row), col) = d;
      obs.mask(static_cast<int>(row), col) = d > 0.0 ? 1 : 0;
    }
  });
  return obs;
}

std::optional<TactileObservation> render_contact(const RayCaster& caster, const Pose& pose, const SensorSpec& spec,
                                                 int touch_id) {
  auto obs = render_contact_raw(caster, pose, spec, touch_id);
  if (obs.contact_fraction() < spec.min_contact_fraction) return std::nullopt;
  return obs;
}

TactileObservation gel_filter(const TactileObservation& obs, double sigma_px) {
  if (sigma_px < 0.0) throw InputError("gel_filter: sigma must be non-negative");
  if (sigma_px == 0.0) return obs;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma_px));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));

  const int w = obs.depth.width(), h = obs.depth.height();
  Grid2<double> num(w, h), den(w, h);
  for (std::size_t i = 0; i < num.size(); ++i) {
    den[i] = obs.mask[i] ? 1.0 : 0.0;
    num[i] = obs.mask[i] ? obs.depth[i] : 0.0;
  }
  auto pass = [&](Grid2<double>& g, bool horizontal) {
    Grid2<double> out(w, h, 0.0);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int rr = horizontal ? r : r + k, cc = horizontal ? c + k : c;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          acc += kernel[k + radius] * g(rr, cc);
        }
        out(r, c) = acc;
      }
    g = std::move(out);
  };
  pass(num, true);
  pass(num, false);
  pass(den, true);
  pass(den, false);

  TactileObservation out = obs;
  for (std::size_t i = 0; i < out.depth.size(); ++i)
    out.depth[i] = obs.mask[i] && den[i] > 0.0 ? num[i] / den[i] : obs.depth[i];
  return out;
}

}  // namespace touchrecon
