#pragma once

#include "touchrecon/geometry/mesh.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace touchrecon {

enum class EmdMethod { Auto, Hungarian, Sinkhorn };

inline constexpr std::size_t kExactEmdLimit = 4096;

/// Minimum-cost perfect assignment for a square cost matrix (row-major).
/// Returns the column assigned to each row.
std::vector<int> hungarian(std::span<const double> cost, int n);

struct SinkhornOptions {
  double epsilon_final = 1e-3;  // relative to the largest cost
  int iterations_per_stage = 10;
  double tolerance = 1e-4;      // marginal violation that ends the final stage
  int max_final_iterations = 300;
};

/// Mean matched distance under the optimal one-to-one assignment. Auto uses
/// the exact solver up to kExactEmdLimit points and log-domain Sinkhorn with
/// epsilon annealing above, reporting the transport cost of the final plan.
double emd(std::span<const Vec3> a, std::span<const Vec3> b, EmdMethod method = EmdMethod::Auto,
           const SinkhornOptions& sinkhorn = {});

/// 0.5 * (mean_a min_b |a - b| + mean_b min_a |a - b|).
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);
/// mean_a min_b |a - b|
double one_sided_chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

/// Faces rotated to start at their lexicographically smallest vertex and
/// sorted by position, vertices renumbered in first-use order; sampling the
/// result depends only on the geometry.
TriangleMesh canonicalize(const TriangleMesh& mesh);

struct EvalOptions {
  std::size_t samples = 2048;          // EMD points per cloud
  std::size_t chamfer_samples = 20000;
  std::uint64_t seed = 0;
  EmdMethod method = EmdMethod::Auto;
};

struct EvalReport {
  double emd = 0.0;
  double chamfer = 0.0;
  double bbox_diagonal = 0.0;  // ground truth, after normalization
  std::size_t samples = 0;
  std::size_t chamfer_samples = 0;
  std::uint64_t seed = 0;
  std::string emd_method;
  Normalization normalization;  // from the ground truth, applied to both

  double chamfer_relative() const { return chamfer / bbox_diagonal; }
  nlohmann::json to_json() const;
};

/// Normalizes both meshes by the ground truth (bounding-box center, longest
/// extent mapped to 2), samples both surfaces and compares.
EvalReport evaluate(const TriangleMesh& recon, const TriangleMesh& gt, const EvalOptions& options = {});

}  // namespace touchrecon
