#include "touchrecon/eval/metrics.hpp"
#include "touchrecon/common/parallel.hpp"
#include "touchrecon/common/rng.hpp"
#include "touchrecon/geometry/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace touchrecon {

std::vector<int> hungarian(std::span<const double> cost, int n) {
  if (n < 0 || cost.size() != static_cast<std::size_t>(n) * n) throw InputError("hungarian: cost matrix must be n x n");
  // Shortest augmenting paths with potentials; rows and columns are 1-based
  // with column 0 as the virtual start.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      const double* row = cost.data() + static_cast<std::size_t>(i0 - 1) * n;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assign[p[j] - 1] = j - 1;
  return assign;
}

namespace {

std::vector<double> distance_matrix(std::span<const Vec3> a, std::span<const Vec3> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> c(n * m);
  parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = (a[i] - b[j]).norm();
  });
  return c;
}

// Uniform marginals 1/n on both sides.
double sinkhorn_cost(const std::vector<double>& c, int n, const SinkhornOptions& opt) {
  const double cmax = *std::max_element(c.begin(), c.end());
  if (cmax == 0.0) return 0.0;
  const double eps_final = opt.epsilon_final * cmax;
  const double log_w = -std::log(static_cast<double>(n));
  std::vector<double> ct(c.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ct[static_cast<std::size_t>(j) * n + i] = c[static_cast<std::size_t>(i) * n + j];
  std::vector<double> f(n, 0.0), g(n, 0.0);

  auto update = [&](std::vector<double>& pot, const std::vector<double>& other, const std::vector<double>& cost,
                    double eps) {
    parallel_for(n, [&](std::ptrdiff_t i) {
      const double* row = cost.data() + static_cast<std::size_t>(i) * n;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) mx = std::max(mx, (other[j] - row[j]) / eps);
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += std::exp((other[j] - row[j]) / eps - mx);
      pot[i] = eps * log_w - eps * (mx + std::log(s));
    });
  };
  auto row_violation = [&](double eps) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += std::exp((f[i] + g[j] - c[static_cast<std::size_t>(i) * n + j]) / eps);
      worst = std::max(worst, std::abs(s * n - 1.0));
    }
    return worst;
  };

  for (double eps = cmax; eps > eps_final; eps *= 0.5)
    for (int it = 0; it < opt.iterations_per_stage; ++it) {
      update(f, g, c, eps);
      update(g, f, ct, eps);
    }
  for (int it = 0; it < opt.max_final_iterations; ++it) {
    update(f, g, c, eps_final);
    update(g, f, ct, eps_final);
    if (it % 10 == 9 && row_violation(eps_final) < opt.tolerance) break;
  }
  double cost = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double cij = c[static_cast<std::size_t>(i) * n + j];
      cost += std::exp((f[i] + g[j] - cij) / eps_final) * cij;
    }
  return cost;
}

}  // namespace

double emd(std::span<const Vec3> a, std::span<const Vec3> b, EmdMethod method, const SinkhornOptions& sinkhorn) {
  if (a.size() != b.size()) throw InputError("emd needs point sets of equal size");
  if (a.empty()) throw InputError("emd needs non-empty point sets");
  const int n = static_cast<int>(a.size());
  const auto c = distance_matrix(a, b);
  if (method == EmdMethod::Auto) method = a.size() <= kExactEmdLimit ? EmdMethod::Hungarian : EmdMethod::Sinkhorn;
  if (method == EmdMethod::Sinkhorn) return sinkhorn_cost(c, n, sinkhorn);
  const auto assign = hungarian(c, n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += c[static_cast<std::size_t>(i) * n + assign[i]];
  return sum / n;
}

double one_sided_chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw InputError("chamfer needs non-empty point sets");
  std::vector<double> nearest(a.size());
  parallel_for(static_cast<std::ptrdiff_t>(a.size()), [&](std::ptrdiff_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, (a[i] - q).squaredNorm());
    nearest[i] = std::sqrt(best);
  });
  return std::accumulate(nearest.begin(), nearest.end(), 0.0) / static_cast<double>(a.size());
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  return 0.5 * (one_sided_chamfer(a, b) + one_sided_chamfer(b, a));
}

TriangleMesh canonicalize(const TriangleMesh& mesh) {
  auto less = [](const Vec3& p, const Vec3& q) {
    return std::lexicographical_compare(p.data(), p.data() + 3, q.data(), q.data() + 3);
  };
  std::vector<std::array<Vec3, 3>> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    std::array<Vec3, 3> t{mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]};
    int first = 0;
    for (int k = 1; k < 3; ++k)
      if (less(t[k], t[first])) first = k;
    std::rotate(t.begin(), t.begin() + first, t.end());
    tris.push_back(t);
  }
  std::sort(tris.begin(), tris.end(), [&](const auto& x, const auto& y) {
    for (int k = 0; k < 3; ++k) {
      if (less(x[k], y[k])) return true;
      if (less(y[k], x[k])) return false;
    }
    return false;
  });
  TriangleMesh out;
  for (const auto& t : tris) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), t.begin(), t.end());
    out.faces.push_back({base, base + 1, base + 2});
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  return {{"emd", emd},
          {"chamfer", chamfer},
          {"chamfer_relative", chamfer_relative()},
          {"bbox_diagonal", bbox_diagonal},
          {"samples", samples},
          {"chamfer_samples", chamfer_samples},
          {"seed", seed},
          {"emd_method", emd_method},
          {"normalization",
           {{"center", {normalization.center.x(), normalization.center.y(), normalization.center.z()}},
            {"scale", normalization.scale}}}};
}

EvalReport evaluate(const TriangleMesh& recon, const TriangleMesh& gt, const EvalOptions& options) {
  if (recon.empty() || gt.empty()) throw InputError("evaluate needs non-empty meshes");
  if (options.samples < 1 || options.chamfer_samples < 1) throw InputError("evaluate needs at least one sample");
  EvalReport r;
  TriangleMesh g = canonicalize(gt);
  const Aabb box = bounds(g);
  const double longest = box.extent().maxCoeff();
  if (!(longest > 0.0)) throw InputError("ground-truth mesh has zero extent");
  r.normalization = {box.center(), 2.0 / longest};
  apply_normalization(g, r.normalization);
  TriangleMesh q = canonicalize(recon);
  apply_normalization(q, r.normalization);
  r.bbox_diagonal = bounds(g).diagonal();
  r.samples = options.samples;
  r.chamfer_samples = options.chamfer_samples;
  r.seed = options.seed;

  const auto ga = sample_surface_points(g, options.samples, Rng::derive(options.seed, 1).next_u64());
  const auto qa = sample_surface_points(q, options.samples, Rng::derive(options.seed, 2).next_u64());
  const EmdMethod m = options.method == EmdMethod::Auto
                          ? (options.samples <= kExactEmdLimit ? EmdMethod::Hungarian : EmdMethod::Sinkhorn)
                          : options.method;
  r.emd_method = m == EmdMethod::Hungarian ? "hungarian" : "sinkhorn";
  r.emd = emd(qa, ga, m);
  const auto gc = sample_surface_points(g, options.chamfer_samples, Rng::derive(options.seed, 3).next_u64());
  const auto qc = sample_surface_points(q, options.chamfer_samples, Rng::derive(options.seed, 4).next_u64());
  r.chamfer = chamfer(qc, gc);
  return r;
}

}  // namespace touchrecon
