#include "touchrecon/losses/sds.hpp"
#include "touchrecon/common/log.hpp"
#include "touchrecon/common/rng.hpp"

#include <cmath>

namespace touchrecon {

void SdsOptions::validate() const {
  if (t_min < 1 || t_max > 1000 || t_min > t_max) throw InputError("SDS timestep range must satisfy 1 <= t_min <= t_max <= 1000");
  if (!std::isfinite(guidance_scale)) throw InputError("guidance scale must be finite");
}

std::optional<Grid2<Vec3>> request_image_gradient(GuidanceBackend& backend, const ViewCamera& cam,
                                                  const NormalImage& image, const SdsOptions& options,
                                                  std::uint64_t request_id, std::uint64_t seed, double weight,
                                                  SdsReport& report) {
  GuidanceRequest q;
  q.request_id = request_id;
  q.prompt = options.prompt;
  q.height = static_cast<std::uint32_t>(cam.height);
  q.width = static_cast<std::uint32_t>(cam.width);
  q.t_min = options.t_min;
  q.t_max = options.t_max;
  q.seed = seed;
  q.guidance_scale = options.guidance_scale;
  append_image(q.images, image.normals);
  if (options.send_cameras) q.cameras.push_back(CameraExtension::from(cam));
  ++report.requests;
  GuidanceGradient g;
  try {
    g = backend.request_gradient(q);
  } catch (const ProtocolError&) {
    throw;
  } catch (const GuidanceError& e) {
    ++report.failures;
    log().warn("guidance request {} skipped: {}", request_id, e.what());
    return std::nullopt;
  }
  if (g.request_id != request_id) throw ProtocolError("guidance reply does not echo the request id");
  if (g.batch != 1 || g.height != q.height || g.width != q.width || g.gradients.size() != q.images.size())
    throw ProtocolError("guidance gradient shape does not match the rendered image");
  Grid2<Vec3> out = image_from_floats(g.gradients, 0, cam.height, cam.width);
  double sq = 0.0;
  for (auto& v : out.data()) {
    sq += v.squaredNorm();
    v *= weight;
  }
  report.gradient_norm = std::sqrt(report.gradient_norm * report.gradient_norm + sq);
  return out;
}

SdsReport sds_field_step(const GridSDF& field, const FieldBounds* bounds, std::span<const ViewCamera> views,
                         GuidanceBackend& backend, const SdsOptions& options, std::uint64_t& next_request_id,
                         std::uint64_t seed, double weight, std::span<double> grad) {
  SdsReport report;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const FieldImage img = render_normal_image(field, views[v], bounds);
    const std::uint64_t id = next_request_id++;
    auto g = request_image_gradient(backend, views[v], img.image, options, id, Rng::derive(seed, v).next_u64(),
                                    weight, report);
    if (g) render_normal_image_backward(field, img, *g, grad);
  }
  return report;
}

SdsReport sds_mesh_step(const TriangleMesh& surface, std::span<const ViewCamera> views, GuidanceBackend& backend,
                        const SdsOptions& options, std::uint64_t& next_request_id, std::uint64_t seed, double weight,
                        std::span<Vec3> position_grad) {
  SdsReport report;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const MeshImage img = render_mesh_normals(surface, views[v]);
    const std::uint64_t id = next_request_id++;
    auto g = request_image_gradient(backend, views[v], img.image, options, id, Rng::derive(seed, v).next_u64(),
                                    weight, report);
    if (g) render_mesh_normals_backward(surface, img, *g, position_grad);
  }
  return report;
}

}  // namespace touchrecon
