#include "rmac/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace rmac::synth {

namespace {

struct Canvas {
  int w, h, k;
  std::vector<std::uint8_t> levels;
  Canvas(int w_, int h_, int k_) : w(w_), h(h_), k(k_), levels(std::size_t(w_) * h_ * k_, 0) {}
  std::uint8_t& at(int c, int x, int y) { return levels[(std::size_t(c) * h + y) * w + x]; }
};

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void paste(Canvas& canvas, const ActivationMap& obj, int ox, int oy, double jitter, Rng& rng) {
  for (int c = 0; c < obj.channels(); ++c) {
    for (int y = 0; y < obj.height(); ++y) {
      for (int x = 0; x < obj.width(); ++x) {
        int l = obj.level(c, x, y);
        if (l > 0 && uniform01(rng) < jitter) l = std::clamp(l + (uniform01(rng) < 0.5 ? -1 : 1), 1, 7);
        canvas.at(c, ox + x, oy + y) = static_cast<std::uint8_t>(l);
      }
    }
  }
}

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
  return buf;
}

}  // namespace

DenseTensor random_dense(int w, int h, int k, double zero_fraction, double max_value, Rng& rng,
                         const std::string& id) {
  DenseTensor t(w, h, k, ImageMeta{id, std::uint32_t(w), std::uint32_t(h)});
  std::uniform_real_distribution<double> value(0.0, max_value);
  for (double& v : t.values) v = uniform01(rng) < zero_fraction ? 0.0 : value(rng);
  return t;
}

ActivationMap random_map(int w, int h, int k, double zero_fraction, Rng& rng, const std::string& id) {
  std::vector<std::uint8_t> levels(std::size_t(w) * h * k);
  for (auto& l : levels) l = uniform01(rng) < zero_fraction ? 0 : std::uint8_t(uniform_int(rng, 1, 7));
  return ActivationMap(w, h, k, std::move(levels), ImageMeta{id, std::uint32_t(w), std::uint32_t(h)});
}

ActivationMap random_pattern(int w, int h, int k, Rng& rng, const std::string& id) {
  // Part-based object: each active channel peaks at one spot and fades with
  // distance. The first four parts sit near the corners so that the peaks
  // span the whole pattern.
  Canvas canvas(w, h, k);
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int active = std::max(4, k / 4);
  for (int i = 0; i < active && i < k; ++i) {
    const int c = order[std::size_t(i)];
    int cx = uniform_int(rng, 0, w - 1);
    int cy = uniform_int(rng, 0, h - 1);
    if (i < 4) {
      cx = (i & 1) ? w - 1 - uniform_int(rng, 0, 1) : uniform_int(rng, 0, 1);
      cy = (i & 2) ? h - 1 - uniform_int(rng, 0, 1) : uniform_int(rng, 0, 1);
    }
    const double falloff = 1.5 + uniform01(rng);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d = std::hypot(double(x - cx), double(y - cy));
        const int l = 7 - int(std::lround(d * falloff));
        if (l > 0) canvas.at(c, x, y) = std::uint8_t(l);
      }
    }
  }
  return ActivationMap(w, h, k, std::move(canvas.levels), ImageMeta{id, std::uint32_t(w), std::uint32_t(h)});
}

PlantedScene make_scene(const SceneParams& p, const ActivationMap* object, Rng& rng, const std::string& id) {
  Canvas canvas(p.width, p.height, p.channels);
  for (auto& l : canvas.levels) {
    if (uniform01(rng) >= p.background_zero_fraction) {
      l = std::uint8_t(uniform_int(rng, 1, p.background_max_level));
    }
  }
  for (int d = 0; d < p.distractors; ++d) {
    const int w = uniform_int(rng, 4, std::min(10, p.width));
    const int h = uniform_int(rng, 4, std::min(8, p.height));
    const auto clutter = random_pattern(w, h, p.channels, rng);
    paste(canvas, clutter, uniform_int(rng, 0, p.width - w), uniform_int(rng, 0, p.height - h), 0.0, rng);
  }
  Region planted{};
  if (object != nullptr) {
    const int ox = uniform_int(rng, 0, p.width - object->width());
    const int oy = uniform_int(rng, 0, p.height - object->height());
    paste(canvas, *object, ox, oy, p.jitter, rng);
    planted = {ox, oy, ox + object->width() - 1, oy + object->height() - 1};
  }
  return {ActivationMap(p.width, p.height, p.channels, std::move(canvas.levels),
                        ImageMeta{id, p.image_width, p.image_height}),
          planted};
}

PlantedPair make_planted_pair(const SceneParams& params, Rng& rng, int index) {
  const int w = uniform_int(rng, 6, std::min(12, params.width));
  const int h = uniform_int(rng, 5, std::min(10, params.height));
  auto object = random_pattern(w, h, params.channels, rng, numbered("query", index));
  auto scene = make_scene(params, &object, rng, numbered("target", index));
  return {std::move(object), std::move(scene)};
}

PlantedDatabase make_planted_database(std::uint64_t seed, int n_database, int n_planted, int n_queries,
                                      int n_training, const SceneParams& params) {
  Rng rng(seed);
  PlantedDatabase db;
  for (int q = 0; q < n_queries; ++q) {
    const int w = uniform_int(rng, 6, std::min(12, params.width));
    const int h = uniform_int(rng, 5, std::min(10, params.height));
    db.query_names.push_back(numbered("query", q));
    db.queries.push_back(random_pattern(w, h, params.channels, rng, db.query_names.back()));
  }
  db.positives.resize(std::size_t(n_queries));

  std::vector<int> slots(static_cast<std::size_t>(n_database));
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<int> object_of(std::size_t(n_database), -1);
  for (int i = 0; i < n_planted && i < n_database; ++i) object_of[std::size_t(slots[std::size_t(i)])] = i % n_queries;

  for (int i = 0; i < n_database; ++i) {
    const auto id = numbered("db", i);
    const int obj = object_of[std::size_t(i)];
    auto scene = make_scene(params, obj >= 0 ? &db.queries[std::size_t(obj)] : nullptr, rng, id);
    if (obj >= 0) db.positives[std::size_t(obj)].insert(id);
    db.planted.push_back(obj >= 0 ? std::optional<Region>(scene.planted) : std::nullopt);
    db.database.push_back(std::move(scene.map));
  }
  for (int i = 0; i < n_training; ++i) {
    db.training.push_back(make_scene(params, nullptr, rng, numbered("train", i)).map);
  }
  return db;
}

}  // namespace rmac::synth
