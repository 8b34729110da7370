#pragma once

#include <cstdint>
#include <string>

namespace rmac {

/// Axis-aligned rectangle on the feature-map grid, inclusive bounds.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  constexpr int width() const noexcept { return x1 - x0 + 1; }
  constexpr int height() const noexcept { return y1 - y0 + 1; }
  constexpr std::int64_t area() const noexcept {
    return std::int64_t{width()} * height();
  }
  constexpr bool within(int w, int h) const noexcept {
    return 0 <= x0 && x0 <= x1 && x1 < w && 0 <= y0 && y0 <= y1 && y1 < h;
  }
  static constexpr Region full(int w, int h) noexcept { return {0, 0, w - 1, h - 1}; }

  friend constexpr bool operator==(const Region&, const Region&) = default;
};

std::string to_string(const Region& r);

/// Throws InvalidInput unless `r` lies inside a w x h grid.
void check_region(const Region& r, int w, int h);

/// Intersection over union on inclusive cell areas.
double iou(const Region& a, const Region& b);

}  // namespace rmac
