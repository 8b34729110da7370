#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rmac/descriptor_vec.hpp"
#include "rmac/parallel.hpp"
#include "rmac/pooling.hpp"
#include "rmac/region.hpp"

namespace rmac {

struct SearchParams {
  int step = 3;                   // t: grid step for window corners and sizes
  double aspect_threshold = 1.1;  // s: max aspect ratio change vs the query
  int refine_max_change = 3;
  int refine_rounds = 5;
  double alpha = 10.0;

  static SearchParams exhaustive_equivalent() {
    SearchParams p;
    p.step = 1;
    p.aspect_threshold = std::numeric_limits<double>::infinity();
    return p;
  }
};

/// Pixel rectangle, half-open: [x0, x1) x [y0, y1). Detections produce
/// whole-pixel coordinates; ground-truth annotations may be fractional.
struct PixelBox {
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;
  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

double box_iou(const PixelBox& a, const PixelBox& b);

struct DetectionResult {
  Region region;
  double score = 0.0;  // cosine to the query, in [0, 1]
  PixelBox image_box;
  std::uint64_t windows_evaluated = 0;
  bool aspect_fallback = false;  // the aspect filter removed every candidate
  int refine_rounds = 0;
};

/// Window ordering used by every search: higher score, then smaller area,
/// then top-most, left-most, shorter, narrower.
bool better_window(double score_a, const Region& a, double score_b, const Region& b);

/// Cosine between the approximate pooled vector of `r` and the unit query.
/// `scratch` must have stack.channels() entries. Zero windows score 0.
double window_score(const IntegralStack& stack, std::span<const double> unit_query, const Region& r,
                    std::span<double> scratch);

/// W(W+1)/2 * H(H+1)/2.
std::uint64_t exhaustive_window_count(int width, int height);

/// Global argmax over every rectangle.
DetectionResult detect_exhaustive(const IntegralStack& stack, const DescriptorVec& query,
                                  Exec exec = Exec::parallel);

/// Windows with corners and sizes on the t-grid whose aspect ratio is within
/// a factor s of `query_aspect` (width / height). Sets `fallback` and returns
/// the unfiltered grid when the filter leaves nothing.
std::vector<Region> aml_candidates(int width, int height, double query_aspect,
                                   const SearchParams& params, bool& fallback);

struct RefineResult {
  Region region;
  double score = 0.0;
  int rounds = 0;
  std::uint64_t windows_evaluated = 0;
};

/// Coordinate descent over (x0, y0, x1, y1), each moved by at most
/// refine_max_change per step; ties keep the smaller move. Stops after
/// refine_rounds rounds or a round without change. Never lowers the score.
RefineResult refine(const IntegralStack& stack, const DescriptorVec& query, const Region& seed,
                    const SearchParams& params);

/// Sampled search followed by refinement of the best candidate.
DetectionResult detect_aml(const IntegralStack& stack, const DescriptorVec& query,
                           double query_aspect, const SearchParams& params = {},
                           Exec exec = Exec::parallel);

/// Scales cell bounds by (W_I / W, H_I / H), rounding outward.
PixelBox map_region_to_image(const Region& r, const ImageMeta& meta, int width, int height);

}  // namespace rmac
