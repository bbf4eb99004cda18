#pragma once

#include "touchrecon/field/grid_sdf.hpp"
#include "touchrecon/guidance/backend.hpp"
#include "touchrecon/render/field_render.hpp"
#include "touchrecon/render/mesh_render.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace touchrecon {

struct SdsOptions {
  std::string prompt = "an object";
  std::uint32_t t_min = 20, t_max = 980;
  float guidance_scale = 100.0f;
  bool send_cameras = true;

  void validate() const;
};

struct SdsReport {
  std::size_t requests = 0;
  std::size_t failures = 0;        // retriable errors; those views were skipped
  double gradient_norm = 0.0;      // L2 norm of all returned image gradients
};

/// Sends one image (batch 1) and returns weight * dL/dN, or nothing when the
/// backend failed in a retriable way (counted in the report). Protocol
/// errors propagate.
std::optional<Grid2<Vec3>> request_image_gradient(GuidanceBackend& backend, const ViewCamera& cam,
                                                  const NormalImage& image, const SdsOptions& options,
                                                  std::uint64_t request_id, std::uint64_t seed, double weight,
                                                  SdsReport& report);

/// Renders each view, requests its gradient and chains it into field
/// parameters.
SdsReport sds_field_step(const GridSDF& field, const FieldBounds* bounds, std::span<const ViewCamera> views,
                         GuidanceBackend& backend, const SdsOptions& options, std::uint64_t& next_request_id,
                         std::uint64_t seed, double weight, std::span<double> grad);

/// Mesh version: renders the extracted surface and chains into tet parameters
/// through vertex positions (`position_grad` has one entry per surface vertex).
SdsReport sds_mesh_step(const TriangleMesh& surface, std::span<const ViewCamera> views, GuidanceBackend& backend,
                        const SdsOptions& options, std::uint64_t& next_request_id, std::uint64_t seed, double weight,
                        std::span<Vec3> position_grad);

}  // namespace touchrecon
