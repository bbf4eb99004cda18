#pragma once

#include "touchrecon/field/tet_grid.hpp"
#include "touchrecon/pipeline/stage1.hpp"

namespace touchrecon {

struct Stage2State {
  TetGrid tet;
  Adam adam;
  int step = 0;
  std::uint64_t next_request_id = 1;
  std::uint64_t sds_requests = 0;
  std::uint64_t sds_failures = 0;
  bool iso_fallback = false;  // the configured iso emptied the mesh and 0 is used instead

  bool operator==(const Stage2State& o) const {
    return tet.params() == o.tet.params() && tet.resolution() == o.tet.resolution() && tet.iso() == o.tet.iso() &&
           adam == o.adam && step == o.step && next_request_id == o.next_request_id &&
           sds_requests == o.sds_requests && sds_failures == o.sds_failures && iso_fallback == o.iso_fallback;
  }
};

/// Tet grid whose signed distances are the stage-1 field at the lattice
/// vertices, offsets zero.
Stage2State stage2_init(const PipelineConfig& config, const GridSDF& field);

/// Continues request ids after stage 1 so ids stay unique across a run.
Stage2State stage2_init(const PipelineConfig& config, const Stage1State& stage1);

/// Runs steps state.step .. stage2.steps (or stop_at): tactile depth/normal
/// losses on observation_batch touches, sds_batch guidance views and normal
/// consistency, with offsets clamped after every update.
void stage2_refine(const PipelineConfig& config, const TouchData& touches, GuidanceBackend& backend,
                   Stage2State& state, const TrainControl& control = {});

/// Final surface at the state's iso, with vertex normals.
TriangleMesh stage2_mesh(const Stage2State& state);

}  // namespace touchrecon
