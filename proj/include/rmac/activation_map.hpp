#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmac/region.hpp"

namespace rmac {

struct ImageMeta {
  std::string image_id;
  std::uint32_t image_width = 0;   // W_I, pixels
  std::uint32_t image_height = 0;  // H_I, pixels

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

/// Uniform 8-level quantizer for post-ReLU responses. Values are clamped at
/// `clamp_max`, floored to integers, then binned by `bin_width()`.
struct QuantizationParams {
  double clamp_max = 128.0;
  int num_levels = 8;

  double bin_width() const noexcept { return clamp_max / num_levels; }
  int max_level() const noexcept { return num_levels - 1; }
};

/// Reconstruction value of a level: 0 for level 0, the bin midpoint otherwise
/// (16l + 8 with the default parameters).
double dequantize_value(int level, const QuantizationParams& params = {});

/// Level of a single raw response. Throws InvalidInput on negative or NaN input.
int quantize_value(double raw, const QuantizationParams& params = {});

/// Dense real-valued W x H x K tensor stored channel-major, row-major inside a
/// channel: index = (c * H + y) * W + x.
struct DenseTensor {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;
  ImageMeta meta;

  DenseTensor() = default;
  DenseTensor(int w, int h, int k, ImageMeta m = {});

  double& at(int c, int x, int y) { return values[(std::size_t(c) * height + y) * width + x]; }
  double at(int c, int x, int y) const {
    return values[(std::size_t(c) * height + y) * width + x];
  }
  std::span<const double> channel(int c) const {
    return {values.data() + std::size_t(c) * height * width, std::size_t(height) * width};
  }
};

/// Quantized, non-negative activation tensor of one image. Level 0 is an
/// implicit zero; stored levels are 0..7. Immutable once built.
class ActivationMap {
 public:
  ActivationMap() = default;
  /// Validates dimensions and that every level is within range.
  ActivationMap(int width, int height, int channels, std::vector<std::uint8_t> levels,
                ImageMeta meta);
  /// All-zero map.
  ActivationMap(int width, int height, int channels, ImageMeta meta);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t cells() const noexcept { return std::size_t(width_) * height_; }
  const ImageMeta& meta() const noexcept { return meta_; }

  std::uint8_t level(int c, int x, int y) const {
    return levels_[(std::size_t(c) * height_ + y) * width_ + x];
  }
  double value(int c, int x, int y, const QuantizationParams& q = {}) const {
    return dequantize_value(level(c, x, y), q);
  }
  /// Levels of one channel in row-major order (position p = y * W + x).
  std::span<const std::uint8_t> channel(int c) const {
    return {levels_.data() + std::size_t(c) * cells(), cells()};
  }
  std::span<const std::uint8_t> levels() const noexcept { return levels_; }

  std::size_t nonzeros() const noexcept;
  std::size_t nonzeros(int c) const noexcept;

  /// Sub-map restricted to `r` (feature-map coordinates). The image metadata
  /// is rescaled so the crop keeps its pixel-per-cell ratio.
  ActivationMap crop(const Region& r) const;

  friend bool operator==(const ActivationMap&, const ActivationMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> levels_;
  ImageMeta meta_;
};

/// Clamp, floor and bin every response. Throws InvalidInput if any value is
/// negative (a tensor that did not pass through ReLU).
ActivationMap quantize(const DenseTensor& raw, const QuantizationParams& params = {});

/// Dense tensor of reconstruction values.
DenseTensor dequantize(const ActivationMap& map, const QuantizationParams& params = {});

/// Feature-map cells covered by a pixel box [x0,x1) x [y0,y1), rounded outward.
Region pixel_box_to_cells(double x0, double y0, double x1, double y1, const ImageMeta& meta,
                          int width, int height);

}  // namespace rmac
