#include "rmac/activation_map.hpp"

#include <algorithm>
#include <cmath>

#include "rmac/errors.hpp"

namespace rmac {

double dequantize_value(int level, const QuantizationParams& params) {
  if (level < 0 || level > params.max_level()) {
    throw InvalidInput("quantization level " + std::to_string(level) + " out of range");
  }
  if (level == 0) return 0.0;
  return params.bin_width() * level + params.bin_width() / 2;
}

int quantize_value(double raw, const QuantizationParams& params) {
  if (!(raw >= 0.0)) {
    throw InvalidInput("negative or NaN response " + std::to_string(raw) +
                       " (expected post-ReLU activations)");
  }
  const double floored = std::floor(std::min(raw, params.clamp_max));
  const int level = static_cast<int>(floored / params.bin_width());
  return std::min(level, params.max_level());
}

DenseTensor::DenseTensor(int w, int h, int k, ImageMeta m)
    : width(w), height(h), channels(k), values(std::size_t(w) * h * k, 0.0), meta(std::move(m)) {
  if (w <= 0 || h <= 0 || k <= 0) throw InvalidInput("tensor dimensions must be positive");
}

namespace {

void fill_meta_defaults(ImageMeta& meta, int w, int h) {
  if (meta.image_width == 0) meta.image_width = static_cast<std::uint32_t>(w);
  if (meta.image_height == 0) meta.image_height = static_cast<std::uint32_t>(h);
  if (meta.image_width < std::uint32_t(w) || meta.image_height < std::uint32_t(h)) {
    throw InvalidInput("image size " + std::to_string(meta.image_width) + "x" +
                       std::to_string(meta.image_height) +
                       " is smaller than the feature map");
  }
}

}  // namespace

ActivationMap::ActivationMap(int width, int height, int channels,
                             std::vector<std::uint8_t> levels, ImageMeta meta)
    : width_(width), height_(height), channels_(channels), levels_(std::move(levels)),
      meta_(std::move(meta)) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw InvalidInput("activation map dimensions must be positive");
  }
  if (levels_.size() != std::size_t(width) * height * channels) {
    throw InvalidInput("level buffer has " + std::to_string(levels_.size()) +
                       " entries, expected W*H*K");
  }
  const QuantizationParams q;
  for (auto l : levels_) {
    if (l > q.max_level()) throw InvalidInput("stored level " + std::to_string(l) + " > 7");
  }
  fill_meta_defaults(meta_, width, height);
}

ActivationMap::ActivationMap(int width, int height, int channels, ImageMeta meta)
    : ActivationMap(width, height, channels,
                    std::vector<std::uint8_t>(std::size_t(std::max(width, 0)) *
                                              std::max(height, 0) * std::max(channels, 0)),
                    std::move(meta)) {}

std::size_t ActivationMap::nonzeros() const noexcept {
  return levels_.size() - std::size_t(std::count(levels_.begin(), levels_.end(), 0));
}

std::size_t ActivationMap::nonzeros(int c) const noexcept {
  auto ch = channel(c);
  return ch.size() - std::size_t(std::count(ch.begin(), ch.end(), 0));
}

ActivationMap ActivationMap::crop(const Region& r) const {
  check_region(r, width_, height_);
  std::vector<std::uint8_t> out(std::size_t(r.width()) * r.height() * channels_);
  auto it = out.begin();
  for (int c = 0; c < channels_; ++c) {
    for (int y = r.y0; y <= r.y1; ++y) {
      auto row = channel(c).subspan(std::size_t(y) * width_ + r.x0, r.width());
      it = std::copy(row.begin(), row.end(), it);
    }
  }
  ImageMeta m = meta_;
  m.image_width = static_cast<std::uint32_t>(
      std::max<long>(r.width(), std::lround(double(meta_.image_width) * r.width() / width_)));
  m.image_height = static_cast<std::uint32_t>(std::max<long>(
      r.height(), std::lround(double(meta_.image_height) * r.height() / height_)));
  return ActivationMap(r.width(), r.height(), channels_, std::move(out), std::move(m));
}

ActivationMap quantize(const DenseTensor& raw, const QuantizationParams& params) {
  if (raw.values.size() != std::size_t(raw.width) * raw.height * raw.channels) {
    throw InvalidInput("dense tensor buffer does not match its dimensions");
  }
  std::vector<std::uint8_t> levels(raw.values.size());
  std::transform(raw.values.begin(), raw.values.end(), levels.begin(), [&](double v) {
    return static_cast<std::uint8_t>(quantize_value(v, params));
  });
  return ActivationMap(raw.width, raw.height, raw.channels, std::move(levels), raw.meta);
}

DenseTensor dequantize(const ActivationMap& map, const QuantizationParams& params) {
  DenseTensor out(map.width(), map.height(), map.channels(), map.meta());
  double lut[16] = {};
  for (int l = 0; l <= params.max_level(); ++l) lut[l] = dequantize_value(l, params);
  auto levels = map.levels();
  std::transform(levels.begin(), levels.end(), out.values.begin(),
                 [&](std::uint8_t l) { return lut[l]; });
  return out;
}

Region pixel_box_to_cells(double x0, double y0, double x1, double y1, const ImageMeta& meta,
                          int width, int height) {
  const double sx = double(width) / meta.image_width;
  const double sy = double(height) / meta.image_height;
  auto clampi = [](double v, int lo, int hi) {
    return std::clamp(static_cast<int>(v), lo, hi);
  };
  Region r;
  r.x0 = clampi(std::floor(x0 * sx), 0, width - 1);
  r.y0 = clampi(std::floor(y0 * sy), 0, height - 1);
  r.x1 = clampi(std::ceil(x1 * sx) - 1, r.x0, width - 1);
  r.y1 = clampi(std::ceil(y1 * sy) - 1, r.y0, height - 1);
  return r;
}

}  // namespace rmac
