#include "rmac/region.hpp"

#include <algorithm>

#include "rmac/errors.hpp"

namespace rmac {

std::string to_string(const Region& r) {
  return std::to_string(r.x0) + "," + std::to_string(r.y0) + "," + std::to_string(r.x1) +
         "," + std::to_string(r.y1);
}

void check_region(const Region& r, int w, int h) {
  if (!r.within(w, h)) {
    throw InvalidInput("region " + to_string(r) + " is outside the " + std::to_string(w) +
                       "x" + std::to_string(h) + " feature map");
  }
}

double iou(const Region& a, const Region& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  std::int64_t inter = 0;
  if (ix0 <= ix1 && iy0 <= iy1) inter = std::int64_t{ix1 - ix0 + 1} * (iy1 - iy0 + 1);
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace rmac
