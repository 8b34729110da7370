#include "rmac/region_grid.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "rmac/errors.hpp"

namespace rmac {

double grid_overlap(int m, int width, int height) {
  const int lng = std::max(width, height);
  const int shrt = std::min(width, height);
  if (m <= 1) return lng == shrt ? 1.0 : 0.0;
  return 1.0 - double(lng - shrt) / (double(m - 1) * shrt);
}

int choose_m(int width, int height, double target_overlap) {
  if (width < 1 || height < 1) throw InvalidInput("feature map dimensions must be positive");
  const int lng = std::max(width, height);
  const int shrt = std::min(width, height);
  if (lng == shrt) return 1;
  const int upper = (lng + shrt - 1) / shrt + 1;
  int best = 2;
  double best_dist = std::abs(grid_overlap(2, width, height) - target_overlap);
  for (int m = 3; m <= upper; ++m) {
    const double d = std::abs(grid_overlap(m, width, height) - target_overlap);
    if (d <= best_dist) {
      best = m;
      best_dist = d;
    }
  }
  return best;
}

namespace {

// Start offsets of n windows of length `side` spread over [0, extent).
std::vector<int> placements(int n, int side, int extent) {
  std::vector<int> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = (extent - side) / 2;
    return out;
  }
  const double stride = double(extent - side) / (n - 1);
  for (int k = 0; k < n; ++k) out[std::size_t(k)] = static_cast<int>(std::floor(k * stride));
  out.back() = extent - side;
  return out;
}

}  // namespace

std::vector<std::vector<Region>> region_grid_by_scale(int width, int height,
                                                      const RegionGridParams& params) {
  if (width < 1 || height < 1) throw InvalidInput("feature map dimensions must be positive");
  if (params.num_scales < 1) throw InvalidInput("number of scales must be >= 1");
  if (!(params.target_overlap > 0.0 && params.target_overlap < 1.0)) {
    throw InvalidInput("target overlap must lie in (0, 1)");
  }
  const int shrt = std::min(width, height);
  const int m = choose_m(width, height, params.target_overlap);
  const bool wide = width >= height;

  std::vector<std::vector<Region>> scales;
  for (int l = 1; l <= params.num_scales; ++l) {
    std::vector<Region> regions;
    // Round half up.
    const int side = l == 1 ? shrt : static_cast<int>(std::floor(2.0 * shrt / (l + 1) + 0.5));
    if (side <= 0) {
      std::cerr << "warning: region side is 0 at scale " << l << " for a " << width << "x"
                << height << " map, scale skipped\n";
      scales.push_back({});
      continue;
    }
    const int n_long = l + m - 1;
    const int n_short = l;
    const auto xs = placements(wide ? n_long : n_short, side, width);
    const auto ys = placements(wide ? n_short : n_long, side, height);
    for (int y : ys) {
      for (int x : xs) regions.push_back({x, y, x + side - 1, y + side - 1});
    }
    scales.push_back(std::move(regions));
  }
  return scales;
}

std::vector<Region> region_grid(int width, int height, const RegionGridParams& params) {
  auto scales = region_grid_by_scale(width, height, params);
  std::vector<Region> out;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const int l = int(i) + 1;
    if (!params.only_scales.empty() &&
        std::find(params.only_scales.begin(), params.only_scales.end(), l) == params.only_scales.end()) {
      continue;
    }
    out.insert(out.end(), scales[i].begin(), scales[i].end());
  }
  return out;
}

}  // namespace rmac
