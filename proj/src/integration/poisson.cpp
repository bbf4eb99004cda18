#include "touchrecon/integration/poisson.hpp"

#include "touchrecon/common/image_io.hpp"

#include <Eigen/SparseCholesky>
#include <fftw3.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

namespace touchrecon {
namespace {

struct Rect {
  int r0 = 0, c0 = 0, r1 = -1, c1 = -1;  // inclusive
  int rows() const { return r1 - r0 + 1; }
  int cols() const { return c1 - c0 + 1; }
};

Rect mask_bounds(const Mask& m) {
  Rect b{m.height(), m.width(), -1, -1};
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m(r, c)) {
        b.r0 = std::min(b.r0, r);
        b.c0 = std::min(b.c0, c);
        b.r1 = std::max(b.r1, r);
        b.c1 = std::max(b.c1, c);
      }
  return b;
}

bool rect_full(const Mask& m, const Rect& b) {
  for (int r = b.r0; r <= b.r1; ++r)
    for (int c = b.c0; c <= b.c1; ++c)
      if (!m(r, c)) return false;
  return true;
}

// Right-hand side of the normal equations: for each pixel, the sum of edge
// targets entering minus those leaving, over edges with a masked endpoint.
Grid2<double> assemble_rhs(const GradientField& g, double pitch) {
  const int w = g.mask.width(), h = g.mask.height();
  Grid2<double> b(w, h, 0.0);
  auto target = [&](const Grid2<double>& grad, int ra, int ca, int rb, int cb) {
    const bool ma = g.mask(ra, ca), mb = g.mask(rb, cb);
    if (ma && mb) return 0.5 * (grad(ra, ca) + grad(rb, cb)) * pitch;
    // The zero-depth rim is taken to lie halfway to the unmasked pixel.
    return 0.5 * (ma ? grad(ra, ca) : grad(rb, cb)) * pitch;
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (c + 1 < w && (g.mask(r, c) || g.mask(r, c + 1))) {
        const double t = target(g.gx, r, c, r, c + 1);
        b(r, c + 1) += t;
        b(r, c) -= t;
      }
      if (r + 1 < h && (g.mask(r, c) || g.mask(r + 1, c))) {
        const double t = target(g.gy, r, c, r + 1, c);
        b(r + 1, c) += t;
        b(r, c) -= t;
      }
    }
  return b;
}

Grid2<double> solve_sine(const GradientField& g, const Grid2<double>& rhs, const Rect& box) {
  const int n = box.rows(), m = box.cols();
  std::vector<double> buf(static_cast<std::size_t>(n) * m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) buf[r * m + c] = rhs(box.r0 + r, box.c0 + c);
  fftw_plan fwd = fftw_plan_r2r_2d(n, m, buf.data(), buf.data(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) {
      const double lam = 4.0 - 2.0 * std::cos(std::numbers::pi * (r + 1) / (n + 1)) -
                         2.0 * std::cos(std::numbers::pi * (c + 1) / (m + 1));
      buf[r * m + c] /= lam;
    }
  fftw_plan inv = fftw_plan_r2r_2d(n, m, buf.data(), buf.data(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  const double scale = 1.0 / (4.0 * (n + 1) * (m + 1));
  Grid2<double> z(g.mask.width(), g.mask.height(), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) z(box.r0 + r, box.c0 + c) = buf[r * m + c] * scale;
  return z;
}

Grid2<double> solve_cosine(const Grid2<double>& rhs) {
  const int n = rhs.height(), m = rhs.width();
  std::vector<double> buf(rhs.data());
  fftw_plan fwd = fftw_plan_r2r_2d(n, m, buf.data(), buf.data(), FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) {
      const double lam =
          4.0 - 2.0 * std::cos(std::numbers::pi * r / n) - 2.0 * std::cos(std::numbers::pi * c / m);
      buf[r * m + c] = (r == 0 && c == 0) ? 0.0 : buf[r * m + c] / lam;
    }
  fftw_plan inv = fftw_plan_r2r_2d(n, m, buf.data(), buf.data(), FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  const double scale = 1.0 / (4.0 * n * m);
  Grid2<double> z(m, n, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = buf[i] * scale;
  // Fix the free constant: zero mean over the frame border.
  double border = 0.0;
  int count = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c)
      if (r == 0 || c == 0 || r == n - 1 || c == m - 1) {
        border += z(r, c);
        ++count;
      }
  border /= count;
  for (auto& v : z.data()) v -= border;
  return z;
}

Grid2<double> solve_sparse(const GradientField& g, const Grid2<double>& rhs) {
  const int w = g.mask.width(), h = g.mask.height();
  Grid2<int> index(w, h, -1);
  int n = 0;
  for (std::size_t i = 0; i < g.mask.size(); ++i)
    if (g.mask[i]) index[i] = n++;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd b(n);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int i = index(r, c);
      if (i < 0) continue;
      b[i] = rhs(r, c);
      double degree = 0.0;
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (!g.mask.in_bounds(rr, cc)) continue;  // frame border: free
        degree += 1.0;
        const int j = index(rr, cc);
        if (j >= 0) trip.emplace_back(i, j, -1.0);  // pinned neighbors contribute only to the degree
      }
      trip.emplace_back(i, i, degree);
    }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error("Poisson system is singular: every mask component must touch an unmasked pixel");
  const Eigen::VectorXd x = solver.solve(b);
  Grid2<double> z(w, h, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i)
    if (index[i] >= 0) z[i] = x[index[i]];
  return z;
}

}  // namespace

PoissonMethod select_poisson_method(const Mask& mask) {
  const Rect box = mask_bounds(mask);
  if (box.r1 < 0) return PoissonMethod::Sparse;
  if (!rect_full(mask, box)) return PoissonMethod::Sparse;
  const bool full_frame = box.r0 == 0 && box.c0 == 0 && box.r1 == mask.height() - 1 && box.c1 == mask.width() - 1;
  if (full_frame) return PoissonMethod::CosineTransform;
  const bool interior = box.r0 > 0 && box.c0 > 0 && box.r1 < mask.height() - 1 && box.c1 < mask.width() - 1;
  return interior ? PoissonMethod::SineTransform : PoissonMethod::Sparse;
}

Grid2<double> integrate_gradients(const GradientField& g, const PoissonOptions& options) {
  const int w = g.mask.width(), h = g.mask.height();
  if (g.gx.width() != w || g.gx.height() != h || g.gy.width() != w || g.gy.height() != h)
    throw InputError("gradient field and mask sizes differ");
  if (count_true(g.mask) == 0) throw InputError("cannot integrate gradients over an empty mask");
  for (std::size_t i = 0; i < g.mask.size(); ++i)
    if (g.mask[i] && !(std::isfinite(g.gx[i]) && std::isfinite(g.gy[i])))
      throw InputError("gradient field has non-finite values inside the mask");

  const PoissonMethod auto_method = select_poisson_method(g.mask);
  PoissonMethod method = options.method == PoissonMethod::Auto ? auto_method : options.method;
  if (method != PoissonMethod::Sparse && method != auto_method)
    throw InputError("requested Poisson transform does not fit this mask shape");
  const Grid2<double> rhs = assemble_rhs(g, options.pixel_pitch);
  switch (method) {
    case PoissonMethod::SineTransform:
      return solve_sine(g, rhs, mask_bounds(g.mask));
    case PoissonMethod::CosineTransform:
      return solve_cosine(rhs);
    default:
      if (auto_method == PoissonMethod::CosineTransform)
        throw InputError("sparse solve needs at least one unmasked pixel to pin the constant");
      return solve_sparse(g, rhs);
  }
}

GradientField depth_gradients(const Grid2<double>& depth, const Mask& mask, double pitch) {
  const int w = depth.width(), h = depth.height();
  GradientField g{Grid2<double>(w, h, 0.0), Grid2<double>(w, h, 0.0), mask};
  auto diff = [&](int r, int c, int dr, int dc) {
    const bool fwd = mask.in_bounds(r + dr, c + dc) && mask(r + dr, c + dc);
    const bool bwd = mask.in_bounds(r - dr, c - dc) && mask(r - dr, c - dc);
    if (fwd && bwd) return (depth(r + dr, c + dc) - depth(r - dr, c - dc)) / (2.0 * pitch);
    if (fwd) return (depth(r + dr, c + dc) - depth(r, c)) / pitch;
    if (bwd) return (depth(r, c) - depth(r - dr, c - dc)) / pitch;
    return 0.0;
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      g.gx(r, c) = diff(r, c, 0, 1);
      g.gy(r, c) = diff(r, c, 1, 0);
    }
  return g;
}

void write_gradient_field(const std::string& dir, const GradientField& g) {
  std::filesystem::create_directories(dir);
  write_pfm(dir + "/gx.pfm", g.gx);
  write_pfm(dir + "/gy.pfm", g.gy);
  write_pgm_mask(dir + "/mask.pgm", g.mask);
}

GradientField read_gradient_field(const std::string& dir) {
  GradientField g{read_pfm(dir + "/gx.pfm"), read_pfm(dir + "/gy.pfm"), read_pgm_mask(dir + "/mask.pgm")};
  if (g.gx.width() != g.mask.width() || g.gy.width() != g.mask.width() || g.gx.height() != g.mask.height() ||
      g.gy.height() != g.mask.height())
    throw InputError(dir + ": gradient and mask sizes differ");
  return g;
}

}  // namespace touchrecon
