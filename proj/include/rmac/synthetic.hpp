#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/region.hpp"

namespace rmac::synth {

// Generators for synthetic activation data with known ground truth.
// Deterministic for a given seed on a given standard library.

using Rng = std::mt19937_64;

/// Dense tensor where each response is zero with probability `zero_fraction`
/// and uniform in [0, max_value] otherwise.
DenseTensor random_dense(int w, int h, int k, double zero_fraction, double max_value, Rng& rng,
                         const std::string& id = "dense");

/// Quantized map with uniform levels 1..7 at non-zero cells.
ActivationMap random_map(int w, int h, int k, double zero_fraction, Rng& rng,
                         const std::string& id = "random");

/// Part-based object: a quarter of the channels (at least four) each peak at
/// one spot and fade with distance; the first four peaks sit near the corners.
ActivationMap random_pattern(int w, int h, int k, Rng& rng, const std::string& id = "pattern");

struct SceneParams {
  int width = 30;
  int height = 22;
  int channels = 32;
  double background_zero_fraction = 0.92;
  int background_max_level = 3;
  int distractors = 2;      // unrelated patterns pasted into the scene
  double jitter = 0.1;      // probability of perturbing a pasted level by +-1
  std::uint32_t image_width = 1024;
  std::uint32_t image_height = 768;
};

struct PlantedScene {
  ActivationMap map;
  Region planted;  // where the object was pasted (feature-map cells)
};

/// Background noise plus distractor patterns, with `object` pasted at a
/// random offset when given (pass nullptr for clutter only).
PlantedScene make_scene(const SceneParams& params, const ActivationMap* object, Rng& rng,
                        const std::string& id);

struct PlantedPair {
  ActivationMap query;  // the object itself, as a cropped query
  PlantedScene target;
};

PlantedPair make_planted_pair(const SceneParams& params, Rng& rng, int index);

struct PlantedDatabase {
  std::vector<ActivationMap> database;
  std::vector<std::optional<Region>> planted;  // per database image
  std::vector<ActivationMap> queries;
  std::vector<std::string> query_names;
  std::vector<std::set<std::string>> positives;  // per query
  std::vector<ActivationMap> training;           // held-out corpus for PCA
};

/// `n_database` images of which `n_planted` contain one of the `n_queries`
/// objects (spread evenly), plus `n_training` held-out clutter images.
PlantedDatabase make_planted_database(std::uint64_t seed, int n_database = 60, int n_planted = 10,
                                      int n_queries = 5, int n_training = 40,
                                      const SceneParams& params = {});

}  // namespace rmac::synth
