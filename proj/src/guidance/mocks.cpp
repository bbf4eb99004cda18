#include "touchrecon/guidance/backend.hpp"
#include "touchrecon/render/mesh_render.hpp"

namespace touchrecon {

GuidanceGradient empty_response(const GuidanceRequest& request) {
  GuidanceGradient g;
  g.request_id = request.request_id;
  g.batch = request.batch;
  g.height = request.height;
  g.width = request.width;
  g.gradients.assign(request.image_floats(), 0.0f);
  return g;
}

GuidanceGradient ZeroMock::request_gradient(const GuidanceRequest& request) {
  request.validate();
  return empty_response(request);
}

TemplateMock::TemplateMock(TriangleMesh target, double lambda) : target_(std::move(target)), lambda_(lambda) {
  target_.validate();
  if (target_.empty()) throw InputError("template mock needs a non-empty target mesh");
  target_.compute_normals();
}

GuidanceGradient TemplateMock::request_gradient(const GuidanceRequest& request) {
  request.validate();
  if (request.cameras.size() != request.batch) throw GuidanceError("template mock needs a camera for every image");
  GuidanceGradient g = empty_response(request);
  const int h = static_cast<int>(request.height), w = static_cast<int>(request.width);
  const std::size_t n = static_cast<std::size_t>(h) * w * 3;
  for (std::uint32_t b = 0; b < request.batch; ++b) {
    const ViewCamera cam = request.cameras[b].camera(w, h);
    const MeshImage t = render_mesh_normals(target_, cam);
    const float* in = request.images.data() + b * n;
    float* out = g.gradients.data() + b * n;
    for (std::size_t i = 0; i < t.image.normals.size(); ++i)
      for (int k = 0; k < 3; ++k)
        out[3 * i + k] = static_cast<float>(lambda_ * (static_cast<double>(in[3 * i + k]) - t.image.normals[i][k]));
  }
  return g;
}

GuidanceGradient CountingBackend::request_gradient(const GuidanceRequest& request) {
  ++requests_;
  images_ += request.batch;
  return inner_->request_gradient(request);
}

}  // namespace touchrecon
