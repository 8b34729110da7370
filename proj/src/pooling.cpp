#include "rmac/pooling.hpp"

#include <algorithm>
#include <cmath>

#include "rmac/errors.hpp"

namespace rmac {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

PowerLut::PowerLut(double alpha, const QuantizationParams& q) : alpha_(alpha) {
  if (!(alpha >= 1.0)) throw InvalidInput("alpha must be >= 1");
  table_.resize(std::size_t(q.num_levels));
  for (int l = 0; l < q.num_levels; ++l) table_[std::size_t(l)] = std::pow(dequantize_value(l, q), alpha);
}

RootLut::RootLut(double alpha, double max_value, double step) : alpha_(alpha), step_(step) {
  if (!(alpha >= 1.0)) throw InvalidInput("alpha must be >= 1");
  const auto n = static_cast<std::size_t>(std::llround(max_value / step)) + 1;
  powers_.resize(n);
  for (std::size_t i = 0; i < n; ++i) powers_[i] = std::pow(double(i) * step, alpha);
}

double RootLut::root(double sum) const {
  if (sum <= 0.0) return 0.0;
  if (sum > powers_.back()) return std::pow(sum, 1.0 / alpha_);
  auto hi = std::lower_bound(powers_.begin(), powers_.end(), sum);
  if (hi == powers_.begin()) return 0.0;
  auto lo = hi - 1;
  const auto idx = (sum - *lo <= *hi - sum) ? lo : hi;
  return double(idx - powers_.begin()) * step_;
}

namespace kernels {
namespace {

// Inclusive 2D prefix sum of one channel into a (H+1) x (W+1) table whose
// first row and column are already zero. Row-then-column order; both the
// serial and OpenMP drivers call this so results are bit-identical.
template <typename Value>
void integral_channel(int w, int h, Value&& value, std::span<double> out) {
  const std::size_t stride = std::size_t(w) + 1;
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    const double* above = out.data() + std::size_t(y) * stride;
    double* cur = out.data() + std::size_t(y + 1) * stride;
    for (int x = 0; x < w; ++x) {
      row += value(x, y);
      cur[x + 1] = above[x + 1] + row;
    }
  }
}

void count_channel(int w, int h, std::span<const double> src, std::span<std::uint32_t> out) {
  const std::size_t stride = std::size_t(w) + 1;
  for (int y = 0; y < h; ++y) {
    std::uint32_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += src[std::size_t(y) * w + x] > 0.0 ? 1u : 0u;
      out[std::size_t(y + 1) * stride + x + 1] = out[std::size_t(y) * stride + x + 1] + row;
    }
  }
}

}  // namespace

namespace serial {

void build_integral(const ActivationMap& map, const PowerLut& lut, std::span<double> out) {
  const std::size_t n = std::size_t(map.height() + 1) * (map.width() + 1);
  for (int c = 0; c < map.channels(); ++c) {
    auto ch = map.channel(c);
    const int w = map.width();
    integral_channel(w, map.height(), [&](int x, int y) { return lut.power(ch[std::size_t(y) * w + x]); },
                     out.subspan(n * c, n));
  }
}

void build_integral(const DenseTensor& t, double alpha, std::span<double> out,
                    std::span<std::uint32_t> counts) {
  const std::size_t n = std::size_t(t.height + 1) * (t.width + 1);
  for (int c = 0; c < t.channels; ++c) {
    auto ch = t.channel(c);
    integral_channel(t.width, t.height,
                     [&](int x, int y) { return std::pow(ch[std::size_t(y) * t.width + x], alpha); },
                     out.subspan(n * c, n));
    count_channel(t.width, t.height, ch, counts.subspan(n * c, n));
  }
}

void channel_max(const ActivationMap& map, const Region& r, std::span<double> out) {
  for (int c = 0; c < map.channels(); ++c) {
    auto ch = map.channel(c);
    std::uint8_t best = 0;
    for (int y = r.y0; y <= r.y1; ++y) {
      for (int x = r.x0; x <= r.x1; ++x) best = std::max(best, ch[std::size_t(y) * map.width() + x]);
    }
    out[std::size_t(c)] = dequantize_value(best);
  }
}

}  // namespace serial

namespace omp {

void build_integral(const ActivationMap& map, const PowerLut& lut, std::span<double> out) {
  const std::size_t n = std::size_t(map.height() + 1) * (map.width() + 1);
  const int w = map.width();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < map.channels(); ++c) {
    auto ch = map.channel(c);
    integral_channel(w, map.height(), [&](int x, int y) { return lut.power(ch[std::size_t(y) * w + x]); },
                     out.subspan(n * c, n));
  }
}

void build_integral(const DenseTensor& t, double alpha, std::span<double> out,
                    std::span<std::uint32_t> counts) {
  const std::size_t n = std::size_t(t.height + 1) * (t.width + 1);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < t.channels; ++c) {
    auto ch = t.channel(c);
    integral_channel(t.width, t.height,
                     [&](int x, int y) { return std::pow(ch[std::size_t(y) * t.width + x], alpha); },
                     out.subspan(n * c, n));
    count_channel(t.width, t.height, ch, counts.subspan(n * c, n));
  }
}

void channel_max(const ActivationMap& map, const Region& r, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < map.channels(); ++c) {
    auto ch = map.channel(c);
    std::uint8_t best = 0;
    for (int y = r.y0; y <= r.y1; ++y) {
      auto row = ch.subspan(std::size_t(y) * map.width() + r.x0, std::size_t(r.width()));
      best = std::max(best, *std::max_element(row.begin(), row.end()));
    }
    out[std::size_t(c)] = dequantize_value(best);
  }
}

}  // namespace omp
}  // namespace kernels

IntegralStack IntegralStack::build(const ActivationMap& map, const PoolingParams& params, Exec exec) {
  const PowerLut lut(params.alpha);
  IntegralStack s;
  s.width_ = map.width();
  s.height_ = map.height();
  s.channels_ = map.channels();
  s.params_ = params;
  s.meta_ = map.meta();
  s.sums_.assign(std::size_t(s.width_ + 1) * (s.height_ + 1) * s.channels_, 0.0);
  if (exec == Exec::serial) {
    kernels::serial::build_integral(map, lut, s.sums_);
  } else {
    kernels::omp::build_integral(map, lut, s.sums_);
  }
  // Any non-empty rectangle sums to at least the smallest level power, so
  // anything below half of it is rounding residue of an empty rectangle.
  s.empty_threshold_ = lut.min_positive() / 2;
  s.map_ = std::make_shared<const ActivationMap>(map);
  if (params.root == RootMode::lookup) s.root_lut_ = std::make_shared<const RootLut>(params.alpha);
  return s;
}

IntegralStack IntegralStack::build(const DenseTensor& t, const PoolingParams& params, Exec exec) {
  if (!(params.alpha >= 1.0)) throw InvalidInput("alpha must be >= 1");
  for (double v : t.values) {
    if (!(v >= 0.0)) throw InvalidInput("negative response in dense tensor");
  }
  IntegralStack s;
  s.width_ = t.width;
  s.height_ = t.height;
  s.channels_ = t.channels;
  s.params_ = params;
  s.meta_ = t.meta;
  const std::size_t n = std::size_t(t.width + 1) * (t.height + 1) * t.channels;
  s.sums_.assign(n, 0.0);
  s.counts_.assign(n, 0u);
  if (exec == Exec::serial) {
    kernels::serial::build_integral(t, params.alpha, s.sums_, s.counts_);
  } else {
    kernels::omp::build_integral(t, params.alpha, s.sums_, s.counts_);
  }
  s.dense_ = std::make_shared<const DenseTensor>(t);
  if (params.root == RootMode::lookup) s.root_lut_ = std::make_shared<const RootLut>(params.alpha);
  return s;
}

bool IntegralStack::rect_empty(int c, const Region& r, double sum) const {
  if (!counts_.empty()) {
    const std::size_t n = std::size_t(height_ + 1) * (width_ + 1);
    auto cnt = [&](int x, int y) { return counts_[n * c + std::size_t(y) * (width_ + 1) + x]; };
    return cnt(r.x1 + 1, r.y1 + 1) - cnt(r.x0, r.y1 + 1) - cnt(r.x1 + 1, r.y0) + cnt(r.x0, r.y0) == 0;
  }
  return sum < empty_threshold_;
}

double IntegralStack::cell_value(int c, int x, int y) const {
  if (dense_) return dense_->at(c, x, y);
  return map_->value(c, x, y);
}

double IntegralStack::root(double sum) const {
  if (sum <= 0.0) return 0.0;
  if (root_lut_) return root_lut_->root(sum);
  return std::pow(sum, 1.0 / params_.alpha);
}

namespace {

inline double approx_max_unchecked(const IntegralStack& s, const Region& r, int c) {
  if (r.x0 == r.x1 && r.y0 == r.y1) return s.cell_value(c, r.x0, r.y0);
  const double sum = s.rect_sum(c, r);
  if (s.rect_empty(c, r, sum)) return 0.0;
  return s.root(sum);
}

}  // namespace

double approx_max(const IntegralStack& stack, const Region& r, int channel) {
  check_region(r, stack.width(), stack.height());
  if (channel < 0 || channel >= stack.channels()) {
    throw InvalidInput("channel " + std::to_string(channel) + " out of range");
  }
  return approx_max_unchecked(stack, r, channel);
}

void approx_regional_vector_into(const IntegralStack& stack, const Region& r, std::span<double> out) {
  for (int c = 0; c < stack.channels(); ++c) out[std::size_t(c)] = approx_max_unchecked(stack, r, c);
}

DescriptorVec approx_regional_vector(const IntegralStack& stack, const Region& r) {
  check_region(r, stack.width(), stack.height());
  DescriptorVec v(static_cast<std::size_t>(stack.channels()));
  approx_regional_vector_into(stack, r, v.values);
  return v;
}

DescriptorVec regional_max(const ActivationMap& map, const Region& r, Exec exec) {
  check_region(r, map.width(), map.height());
  DescriptorVec v(static_cast<std::size_t>(map.channels()));
  if (exec == Exec::serial) {
    kernels::serial::channel_max(map, r, v.values);
  } else {
    kernels::omp::channel_max(map, r, v.values);
  }
  return v;
}

DescriptorVec mac(const ActivationMap& map, Exec exec) {
  return regional_max(map, Region::full(map.width(), map.height()), exec);
}

double generalized_mean(std::span<const double> values, double alpha) {
  double s = 0.0;
  for (double v : values) s += std::pow(v, alpha);
  return s > 0.0 ? std::pow(s, 1.0 / alpha) : 0.0;
}

}  // namespace rmac
