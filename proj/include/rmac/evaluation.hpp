#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/localizer.hpp"
#include "rmac/parallel.hpp"

namespace rmac {

/// One evaluation query, Oxford-style: good and ok images are positives,
/// junk images are removed from the ranking before scoring.
struct GroundTruth {
  std::string name;         // query name, e.g. all_souls_1
  std::string query_image;  // database id of the image the query is cropped from
  PixelBox box;             // query box in that image's pixels
  std::set<std::string> positives;
  std::set<std::string> junk;
};

/// Reads `<name>_query.txt` ("image_id x0 y0 x1 y1", an "oxc1_" prefix on the
/// id is dropped) with `<name>_good.txt`, `<name>_ok.txt` and `<name>_junk.txt`
/// (one id per line, missing files are empty). Sorted by name.
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& dir);

/// Mean over positives of precision at each positive's rank, junk removed.
/// Positives never retrieved contribute zero.
double average_precision(std::span<const std::string> ranking, const std::set<std::string>& positives,
                         const std::set<std::string>& junk);

struct MapReport {
  std::vector<std::pair<std::string, double>> per_query;
  std::vector<std::string> skipped;  // queries without positives
  double map = 0.0;
};

/// `rankings[i]` is the ranked id list for `truth[i]`.
MapReport evaluate_map(std::span<const std::vector<std::string>> rankings,
                       std::span<const GroundTruth> truth);

/// Query name without its trailing "_<digits>", grouping queries per landmark.
std::string query_group(const std::string& name);

struct IouSample {
  ActivationMap map;  // full image
  PixelBox box;       // annotated object, image pixels
};

struct IouReport {
  double mean_iou_exhaustive = 0.0;      // exhaustive detection vs annotation
  double mean_iou_aml = 0.0;             // AML detection vs annotation
  double mean_iou_aml_vs_optimal = 0.0;  // AML vs exhaustive window
  double mean_window_fraction = 0.0;     // AML windows / exhaustive windows
  std::size_t pairs = 0;
  std::size_t skipped_groups = 0;
};

/// For every ordered pair inside a group, crops the first sample to its box,
/// localizes it in the second and compares with the second's annotation.
/// Groups of one are skipped.
IouReport evaluate_iou_protocol(std::span<const std::vector<IouSample>> groups,
                                const SearchParams& params = {}, Exec exec = Exec::parallel);

}  // namespace rmac
