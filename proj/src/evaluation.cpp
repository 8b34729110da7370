#include "rmac/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>

#include "rmac/errors.hpp"
#include "rmac/pooling.hpp"

namespace rmac {

namespace {

std::set<std::string> read_id_list(const std::filesystem::path& path) {
  std::set<std::string> ids;
  std::ifstream in(path);
  std::string id;
  while (in >> id) ids.insert(id);
  return ids;
}

}  // namespace

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidInput("ground-truth directory " + dir.string() + " does not exist");
  }
  const std::string suffix = "_query.txt";
  std::vector<GroundTruth> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto file = entry.path().filename().string();
    if (file.size() <= suffix.size() || !file.ends_with(suffix)) continue;
    GroundTruth gt;
    gt.name = file.substr(0, file.size() - suffix.size());
    std::ifstream in(entry.path());
    if (!(in >> gt.query_image >> gt.box.x0 >> gt.box.y0 >> gt.box.x1 >> gt.box.y1)) {
      throw InvalidInput("malformed query file " + entry.path().string());
    }
    if (gt.query_image.starts_with("oxc1_")) gt.query_image.erase(0, 5);
    for (const char* kind : {"_good.txt", "_ok.txt"}) {
      auto ids = read_id_list(dir / (gt.name + kind));
      gt.positives.insert(ids.begin(), ids.end());
    }
    gt.junk = read_id_list(dir / (gt.name + "_junk.txt"));
    out.push_back(std::move(gt));
  }
  if (out.empty()) throw InvalidInput("no *_query.txt files in " + dir.string());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

double average_precision(std::span<const std::string> ranking, const std::set<std::string>& positives,
                         const std::set<std::string>& junk) {
  if (positives.empty()) return 0.0;
  std::size_t rank = 0;
  std::size_t hits = 0;
  double sum = 0.0;
  for (const auto& id : ranking) {
    if (junk.contains(id)) continue;
    ++rank;
    if (positives.contains(id)) {
      ++hits;
      sum += double(hits) / double(rank);
    }
  }
  return sum / double(positives.size());
}

MapReport evaluate_map(std::span<const std::vector<std::string>> rankings,
                       std::span<const GroundTruth> truth) {
  if (rankings.size() != truth.size()) {
    throw InvalidInput("got " + std::to_string(rankings.size()) + " rankings for " +
                       std::to_string(truth.size()) + " queries");
  }
  MapReport report;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].positives.empty()) {
      std::cerr << "warning: query " << truth[i].name << " has no positives, excluded\n";
      report.skipped.push_back(truth[i].name);
      continue;
    }
    const double ap = average_precision(rankings[i], truth[i].positives, truth[i].junk);
    report.per_query.emplace_back(truth[i].name, ap);
    sum += ap;
  }
  if (report.per_query.empty()) throw InvalidInput("no query with positives to evaluate");
  report.map = sum / double(report.per_query.size());
  return report;
}

std::string query_group(const std::string& name) {
  auto us = name.find_last_of('_');
  if (us == std::string::npos || us + 1 == name.size()) return name;
  for (std::size_t i = us + 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  }
  return name.substr(0, us);
}

IouReport evaluate_iou_protocol(std::span<const std::vector<IouSample>> groups,
                                const SearchParams& params, Exec exec) {
  IouReport report;
  double sum_ex = 0.0;
  double sum_aml = 0.0;
  double sum_opt = 0.0;
  double sum_frac = 0.0;
  const PoolingParams pooling{params.alpha, RootMode::exact};
  for (const auto& group : groups) {
    if (group.size() < 2) {
      ++report.skipped_groups;
      continue;
    }
    for (std::size_t a = 0; a < group.size(); ++a) {
      const auto& q = group[a];
      const auto cells = pixel_box_to_cells(q.box.x0, q.box.y0, q.box.x1, q.box.y1, q.map.meta(),
                                            q.map.width(), q.map.height());
      const auto crop = q.map.crop(cells);
      const auto query = mac(crop);
      if (l2_norm(query.values) == 0.0) continue;
      const double aspect = double(crop.width()) / crop.height();
      for (std::size_t b = 0; b < group.size(); ++b) {
        if (a == b) continue;
        const auto& target = group[b];
        const auto stack = IntegralStack::build(target.map, pooling, exec);
        const auto ex = detect_exhaustive(stack, query, exec);
        const auto aml = detect_aml(stack, query, aspect, params, exec);
        sum_ex += box_iou(ex.image_box, target.box);
        sum_aml += box_iou(aml.image_box, target.box);
        sum_opt += iou(aml.region, ex.region);
        sum_frac += double(aml.windows_evaluated) / double(ex.windows_evaluated);
        ++report.pairs;
      }
    }
  }
  if (report.pairs > 0) {
    const double n = double(report.pairs);
    report.mean_iou_exhaustive = sum_ex / n;
    report.mean_iou_aml = sum_aml / n;
    report.mean_iou_aml_vs_optimal = sum_opt / n;
    report.mean_window_fraction = sum_frac / n;
  }
  return report;
}

}  // namespace rmac
