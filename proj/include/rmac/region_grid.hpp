#pragma once

#include <vector>

#include "rmac/region.hpp"

namespace rmac {

struct RegionGridParams {
  int num_scales = 3;           // L
  double target_overlap = 0.4;  // between consecutive largest-scale squares
  /// When non-empty, only these scales (1-based) are emitted.
  std::vector<int> only_scales;
};

/// Number of largest-scale squares placed along the long axis: the m whose
/// consecutive overlap is nearest `target_overlap`, ties toward larger m.
/// Square maps always give 1.
int choose_m(int width, int height, double target_overlap = 0.4);

/// Fractional overlap of consecutive side-min(W,H) squares when m of them
/// span the long axis with pinned endpoints.
double grid_overlap(int m, int width, int height);

/// Square regions per scale: scale l >= 2 holds l x (l+m-1) squares of side
/// round(2 min(W,H) / (l+1)); scale 1 holds m squares of side min(W,H).
/// Endpoints touch the borders; order is scale, then row, then column.
/// Scales whose side rounds to 0 are skipped.
std::vector<std::vector<Region>> region_grid_by_scale(int width, int height,
                                                      const RegionGridParams& params = {});

/// Flattened region_grid_by_scale, honoring params.only_scales.
std::vector<Region> region_grid(int width, int height, const RegionGridParams& params = {});

}  // namespace rmac
