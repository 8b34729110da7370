#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/parallel.hpp"

namespace rmac {

// Measurements of how well the generalized mean tracks the true max, taken
// over every rectangle of every input map. The generalized mean is
// accumulated directly here rather than read from an integral stack: at
// large alpha the four-term lookup cancels away small-valued rectangles of
// raw dense input, which would measure float error instead of the estimate.

struct ErrorProfileRow {
  std::int64_t region_size = 0;  // cell count of the rectangle
  double alpha = 0.0;
  double mean_abs_error = 0.0;   // mean over (region, channel) of |approx - max|
  std::uint64_t samples = 0;

  friend bool operator==(const ErrorProfileRow&, const ErrorProfileRow&) = default;
};

/// Rows sorted by (region_size, alpha). Only sizes that occur are reported.
std::vector<ErrorProfileRow> approximation_error_profile(std::span<const DenseTensor> maps,
                                                         std::span<const double> alphas,
                                                         Exec exec = Exec::parallel);
std::vector<ErrorProfileRow> approximation_error_profile(std::span<const ActivationMap> maps,
                                                         std::span<const double> alphas,
                                                         Exec exec = Exec::parallel);

/// CSV with header `region_size,alpha,mean_abs_error`.
void write_error_profile_csv(std::ostream& out, std::span<const ErrorProfileRow> rows);

struct CosineStats {
  double mean = 0.0;
  double min = 1.0;
  std::uint64_t regions = 0;  // regions with a non-zero exact vector
};

/// cosine(exact regional vector, approximate regional vector) over all regions.
CosineStats approximation_cosine_stats(std::span<const DenseTensor> maps, double alpha,
                                       Exec exec = Exec::parallel);

}  // namespace rmac
