#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/descriptor_vec.hpp"
#include "rmac/parallel.hpp"
#include "rmac/region.hpp"

namespace rmac {

/// How approx_max turns a pooled power sum back into a response value.
///  exact  - std::pow(sum, 1/alpha)
///  lookup - binary search over a grid of t^alpha (step 1/256 on [0,128]),
///           falling back to std::pow outside the table
enum class RootMode { exact, lookup };

struct PoolingParams {
  double alpha = 10.0;
  RootMode root = RootMode::exact;
};

/// v^alpha for the eight reconstruction values of the quantizer.
class PowerLut {
 public:
  explicit PowerLut(double alpha, const QuantizationParams& q = {});

  double power(int level) const { return table_[std::size_t(level)]; }
  double alpha() const noexcept { return alpha_; }
  /// Smallest non-zero entry; any non-empty sum is at least this large.
  double min_positive() const { return table_[1]; }
  std::span<const double> table() const noexcept { return table_; }

 private:
  double alpha_;
  std::vector<double> table_;
};

/// Inverse of t -> t^alpha on a fixed grid, answered by binary search.
class RootLut {
 public:
  explicit RootLut(double alpha, double max_value = 128.0, double step = 1.0 / 256);

  /// Grid point whose power is nearest `sum`; std::pow beyond the table.
  double root(double sum) const;
  double step() const noexcept { return step_; }
  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
  double step_;
  std::vector<double> powers_;
};

/// Per-channel (H+1) x (W+1) integral images of X_i(p)^alpha, double precision.
/// Row and column 0 are zero. Keeps a handle on its source tensor so that
/// single-cell queries return the stored response exactly.
class IntegralStack {
 public:
  static IntegralStack build(const ActivationMap& map, const PoolingParams& params = {},
                             Exec exec = Exec::parallel);
  /// Unquantized input, used to measure the approximation on raw responses.
  static IntegralStack build(const DenseTensor& tensor, const PoolingParams& params = {},
                             Exec exec = Exec::parallel);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  const PoolingParams& params() const noexcept { return params_; }
  double alpha() const noexcept { return params_.alpha; }
  const ImageMeta& meta() const noexcept { return meta_; }

  /// Cumulative entry for the (exclusive) corner (x, y), 0 <= x <= W, 0 <= y <= H.
  double at(int c, int x, int y) const {
    return sums_[(std::size_t(c) * (height_ + 1) + y) * (width_ + 1) + x];
  }
  std::span<const double> table(int c) const {
    const std::size_t n = std::size_t(height_ + 1) * (width_ + 1);
    return {sums_.data() + n * c, n};
  }

  /// Sum of X_i(p)^alpha over `r` from four lookups. No bounds check.
  double rect_sum(int c, const Region& r) const {
    return at(c, r.x1 + 1, r.y1 + 1) - at(c, r.x0, r.y1 + 1) - at(c, r.x1 + 1, r.y0) +
           at(c, r.x0, r.y0);
  }

  /// True when the region certainly holds no non-zero response in channel c.
  bool rect_empty(int c, const Region& r, double sum) const;

  /// Source response at a cell (dequantized for quantized input).
  double cell_value(int c, int x, int y) const;

  /// Alpha-th root of a rectangle sum according to params().root.
  double root(double sum) const;

  friend bool operator==(const IntegralStack& a, const IntegralStack& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.channels_ == b.channels_ &&
           a.params_.alpha == b.params_.alpha && a.sums_ == b.sums_;
  }

 private:
  IntegralStack() = default;

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  PoolingParams params_;
  ImageMeta meta_;
  std::vector<double> sums_;
  // Non-zero counts, kept only for dense input where floating cancellation
  // can leave residue in empty rectangles.
  std::vector<std::uint32_t> counts_;
  double empty_threshold_ = 0.0;
  std::shared_ptr<const ActivationMap> map_;
  std::shared_ptr<const DenseTensor> dense_;
  std::shared_ptr<const RootLut> root_lut_;
};

/// Global max-pooling per channel of dequantized responses.
DescriptorVec mac(const ActivationMap& map, Exec exec = Exec::parallel);

/// Exact per-channel max over `r`. Throws InvalidInput if `r` is out of bounds.
DescriptorVec regional_max(const ActivationMap& map, const Region& r, Exec exec = Exec::parallel);

/// Generalized-mean estimate of the max of one channel over `r`.
double approx_max(const IntegralStack& stack, const Region& r, int channel);

/// approx_max over all channels.
DescriptorVec approx_regional_vector(const IntegralStack& stack, const Region& r);

/// Allocation-free variant for hot loops; `out` must have stack.channels() entries.
/// No bounds check on `r`.
void approx_regional_vector_into(const IntegralStack& stack, const Region& r,
                                 std::span<double> out);

/// (sum v^alpha)^(1/alpha) evaluated directly.
double generalized_mean(std::span<const double> values, double alpha);

}  // namespace rmac
