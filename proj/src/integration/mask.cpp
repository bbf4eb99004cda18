#include "touchrecon/integration/mask.hpp"

#include "touchrecon/common/types.hpp"

#include <vector>

namespace touchrecon {

Mask largest_component(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  Grid2<int> label(w, h, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c) || label(r, c) >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      std::size_t size = 0;
      stack.assign(1, {r, c});
      label(r, c) = id;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        ++size;
        const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int rr = pr + dr[k], cc = pc + dc[k];
          if (mask.in_bounds(rr, cc) && mask(rr, cc) && label(rr, cc) < 0) {
            label(rr, cc) = id;
            stack.emplace_back(rr, cc);
          }
        }
      }
      sizes.push_back(size);
    }
  Mask out(w, h, 0);
  if (sizes.empty()) return out;
  int best = 0;
  for (int i = 1; i < static_cast<int>(sizes.size()); ++i)
    if (sizes[i] > sizes[best]) best = i;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label[i] == best ? 1 : 0;
  return out;
}

Mask mask_from_depth(const Grid2<double>& depth, double threshold) {
  if (!(threshold > 0.0)) throw InputError("mask threshold must be positive");
  Mask m(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = depth[i] > threshold ? 1 : 0;
  return largest_component(m);
}

Mask erode_mask(const Mask& mask) {
  Mask out(mask.width(), mask.height(), 0);
  auto on = [&](int r, int c) { return mask.in_bounds(r, c) && mask(r, c); };
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      out(r, c) = on(r, c) && on(r - 1, c) && on(r + 1, c) && on(r, c - 1) && on(r, c + 1) ? 1 : 0;
  return out;
}

}  // namespace touchrecon
