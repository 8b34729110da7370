#include "rmac/localizer.hpp"

#include <algorithm>
#include <cmath>

#include "rmac/descriptor.hpp"
#include "rmac/errors.hpp"

namespace rmac {

double box_iou(const PixelBox& a, const PixelBox& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

bool better_window(double score_a, const Region& a, double score_b, const Region& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.area() != b.area()) return a.area() < b.area();
  if (a.y0 != b.y0) return a.y0 < b.y0;
  if (a.x0 != b.x0) return a.x0 < b.x0;
  if (a.y1 != b.y1) return a.y1 < b.y1;
  return a.x1 < b.x1;
}

double window_score(const IntegralStack& stack, std::span<const double> unit_query, const Region& r,
                    std::span<double> scratch) {
  approx_regional_vector_into(stack, r, scratch);
  double fq = 0.0;
  double ff = 0.0;
  for (std::size_t i = 0; i < scratch.size(); ++i) {
    fq += scratch[i] * unit_query[i];
    ff += scratch[i] * scratch[i];
  }
  if (ff == 0.0) return 0.0;
  return fq / std::sqrt(ff);
}

std::uint64_t exhaustive_window_count(int width, int height) {
  return (std::uint64_t(width) * (width + 1) / 2) * (std::uint64_t(height) * (height + 1) / 2);
}

namespace {

struct Best {
  double score = -1.0;
  Region region{};
  bool valid = false;

  void offer(double s, const Region& r) {
    if (!valid || better_window(s, r, score, region)) {
      score = s;
      region = r;
      valid = true;
    }
  }
  void merge(const Best& o) {
    if (o.valid) offer(o.score, o.region);
  }
};

std::vector<double> unit_query_for(const IntegralStack& stack, const DescriptorVec& query) {
  if (int(query.size()) != stack.channels()) {
    throw DimensionMismatch("query has " + std::to_string(query.size()) + " dimensions, map has " +
                            std::to_string(stack.channels()) + " channels");
  }
  return l2_normalize(query).values;
}

void scan_top_row(const IntegralStack& s, std::span<const double> q, int y0, std::span<double> scratch,
                  Best& best) {
  for (int x0 = 0; x0 < s.width(); ++x0) {
    for (int y1 = y0; y1 < s.height(); ++y1) {
      for (int x1 = x0; x1 < s.width(); ++x1) {
        const Region r{x0, y0, x1, y1};
        best.offer(window_score(s, q, r, scratch), r);
      }
    }
  }
}

namespace serial {

Best exhaustive(const IntegralStack& s, std::span<const double> q) {
  Best best;
  std::vector<double> scratch(static_cast<std::size_t>(s.channels()));
  for (int y0 = 0; y0 < s.height(); ++y0) scan_top_row(s, q, y0, scratch, best);
  return best;
}

Best score_windows(const IntegralStack& s, std::span<const double> q, std::span<const Region> windows) {
  Best best;
  std::vector<double> scratch(static_cast<std::size_t>(s.channels()));
  for (const auto& r : windows) best.offer(window_score(s, q, r, scratch), r);
  return best;
}

}  // namespace serial

namespace omp {

// Each top row gets its own best; the fold afterwards uses the same total
// order, so the winner does not depend on the thread count.
Best exhaustive(const IntegralStack& s, std::span<const double> q) {
  std::vector<Best> rows(static_cast<std::size_t>(s.height()));
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(s.channels()));
#pragma omp for schedule(dynamic, 1)
    for (int y0 = 0; y0 < s.height(); ++y0) scan_top_row(s, q, y0, scratch, rows[std::size_t(y0)]);
  }
  Best best;
  for (const auto& b : rows) best.merge(b);
  return best;
}

Best score_windows(const IntegralStack& s, std::span<const double> q, std::span<const Region> windows) {
  std::vector<double> scores(windows.size());
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(s.channels()));
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < windows.size(); ++i) scores[i] = window_score(s, q, windows[i], scratch);
  }
  Best best;
  for (std::size_t i = 0; i < windows.size(); ++i) best.offer(scores[i], windows[i]);
  return best;
}

}  // namespace omp

std::vector<int> grid_steps(int from, int extent, int step) {
  std::vector<int> v;
  for (int i = from; i < extent; i += step) v.push_back(i);
  return v;
}

}  // namespace

DetectionResult detect_exhaustive(const IntegralStack& stack, const DescriptorVec& query, Exec exec) {
  const auto q = unit_query_for(stack, query);
  const Best best = exec == Exec::serial ? serial::exhaustive(stack, q) : omp::exhaustive(stack, q);
  DetectionResult d;
  d.region = best.region;
  d.score = best.score;
  d.windows_evaluated = exhaustive_window_count(stack.width(), stack.height());
  d.image_box = map_region_to_image(d.region, stack.meta(), stack.width(), stack.height());
  return d;
}

std::vector<Region> aml_candidates(int width, int height, double query_aspect,
                                   const SearchParams& params, bool& fallback) {
  if (params.step < 1) throw InvalidInput("search step must be >= 1");
  if (!(params.aspect_threshold >= 1.0)) throw InvalidInput("aspect threshold must be >= 1");
  if (!(query_aspect > 0.0)) throw InvalidInput("query aspect ratio must be positive");
  const int t = params.step;
  auto sizes = [t](int extent) {
    std::vector<int> v;
    for (int s = t; s <= extent; s += t) v.push_back(s);
    if (v.empty()) v.push_back(extent);
    return v;
  };
  const auto xs = grid_steps(0, width, t);
  const auto ys = grid_steps(0, height, t);
  const auto ws = sizes(width);
  const auto hs = sizes(height);

  std::vector<Region> all;
  std::vector<Region> kept;
  for (int y0 : ys) {
    for (int x0 : xs) {
      for (int h : hs) {
        if (y0 + h > height) break;
        for (int w : ws) {
          if (x0 + w > width) break;
          const Region r{x0, y0, x0 + w - 1, y0 + h - 1};
          all.push_back(r);
          const double change = (double(w) / h) / query_aspect;
          if (std::max(change, 1.0 / change) <= params.aspect_threshold) kept.push_back(r);
        }
      }
    }
  }
  fallback = kept.empty();
  return fallback ? all : kept;
}

RefineResult refine(const IntegralStack& stack, const DescriptorVec& query, const Region& seed,
                    const SearchParams& params) {
  check_region(seed, stack.width(), stack.height());
  const auto q = unit_query_for(stack, query);
  std::vector<double> scratch(static_cast<std::size_t>(stack.channels()));

  RefineResult res;
  res.region = seed;
  res.score = window_score(stack, q, seed, scratch);
  // Deltas by increasing magnitude, negative first; with a strict '>' below
  // this keeps the smallest move among equal scores.
  std::vector<int> deltas;
  for (int m = 1; m <= params.refine_max_change; ++m) {
    deltas.push_back(-m);
    deltas.push_back(m);
  }
  for (int round = 0; round < params.refine_rounds; ++round) {
    ++res.rounds;
    bool changed = false;
    for (int coord = 0; coord < 4; ++coord) {
      Region best = res.region;
      double best_score = res.score;
      for (int d : deltas) {
        Region r = res.region;
        int* field[] = {&r.x0, &r.y0, &r.x1, &r.y1};
        *field[coord] += d;
        if (!r.within(stack.width(), stack.height())) continue;
        const double s = window_score(stack, q, r, scratch);
        ++res.windows_evaluated;
        if (s > best_score) {
          best_score = s;
          best = r;
        }
      }
      if (best != res.region) {
        res.region = best;
        res.score = best_score;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return res;
}

DetectionResult detect_aml(const IntegralStack& stack, const DescriptorVec& query, double query_aspect,
                           const SearchParams& params, Exec exec) {
  const auto q = unit_query_for(stack, query);
  bool fallback = false;
  const auto windows = aml_candidates(stack.width(), stack.height(), query_aspect, params, fallback);
  const Best seed = exec == Exec::serial ? serial::score_windows(stack, q, windows)
                                         : omp::score_windows(stack, q, windows);
  const auto refined = refine(stack, query, seed.region, params);

  DetectionResult d;
  d.region = refined.region;
  d.score = refined.score;
  d.windows_evaluated = windows.size() + refined.windows_evaluated;
  d.aspect_fallback = fallback;
  d.refine_rounds = refined.rounds;
  d.image_box = map_region_to_image(d.region, stack.meta(), stack.width(), stack.height());
  return d;
}

PixelBox map_region_to_image(const Region& r, const ImageMeta& meta, int width, int height) {
  // Integer products first so exact multiples divide exactly.
  const double iw = meta.image_width;
  const double ih = meta.image_height;
  PixelBox b;
  b.x0 = std::floor(r.x0 * iw / width);
  b.y0 = std::floor(r.y0 * ih / height);
  b.x1 = std::min(std::ceil((r.x1 + 1) * iw / width), iw);
  b.y1 = std::min(std::ceil((r.y1 + 1) * ih / height), ih);
  return b;
}

}  // namespace rmac
