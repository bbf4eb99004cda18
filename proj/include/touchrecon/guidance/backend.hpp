#pragma once

#include "touchrecon/guidance/protocol.hpp"
#include "touchrecon/geometry/mesh.hpp"

#include <atomic>
#include <memory>
#include <string>

namespace touchrecon {

/// Source of image-space guidance gradients dL/dN for rendered normal images.
class GuidanceBackend {
 public:
  virtual ~GuidanceBackend() = default;
  virtual GuidanceGradient request_gradient(const GuidanceRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Response with the request's id and shape and all-zero gradients.
GuidanceGradient empty_response(const GuidanceRequest& request);

class ZeroMock : public GuidanceBackend {
 public:
  GuidanceGradient request_gradient(const GuidanceRequest& request) override;
  std::string name() const override { return "zero-mock"; }
};

/// Returns lambda * (I - T) where T renders the target mesh at the camera sent
/// with each image. Requests without cameras are rejected.
class TemplateMock : public GuidanceBackend {
 public:
  explicit TemplateMock(TriangleMesh target, double lambda = 1.0);
  GuidanceGradient request_gradient(const GuidanceRequest& request) override;
  std::string name() const override { return "template-mock"; }

  const TriangleMesh& target() const { return target_; }
  double lambda() const { return lambda_; }

 private:
  TriangleMesh target_;
  double lambda_;
};

/// Forwards to another backend and counts requests and images.
class CountingBackend : public GuidanceBackend {
 public:
  explicit CountingBackend(std::shared_ptr<GuidanceBackend> inner) : inner_(std::move(inner)) {}
  GuidanceGradient request_gradient(const GuidanceRequest& request) override;
  std::string name() const override { return inner_->name(); }

  std::uint64_t requests() const { return requests_.load(); }
  std::uint64_t images() const { return images_.load(); }

 private:
  std::shared_ptr<GuidanceBackend> inner_;
  std::atomic<std::uint64_t> requests_{0}, images_{0};
};

}  // namespace touchrecon
