#include "rmac/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "rmac/actmap_codec.hpp"
#include "rmac/errors.hpp"

namespace rmac {

DescriptorKind parse_descriptor_kind(std::string_view s) {
  if (s == "mac" || s == "MAC") return DescriptorKind::mac;
  if (s == "rmac" || s == "R-MAC" || s == "r-mac") return DescriptorKind::rmac;
  throw InvalidInput("unknown descriptor kind '" + std::string(s) + "' (expected mac or rmac)");
}

std::string_view to_string(DescriptorKind k) { return k == DescriptorKind::mac ? "mac" : "rmac"; }

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::filtered: return "filtered";
    case Stage::reranked: return "reranked";
    case Stage::expanded: return "qe";
  }
  return "?";
}

DescriptorVec describe(const ActivationMap& map, DescriptorKind kind, const RegionGridParams& grid,
                       const PcaModel& model) {
  return kind == DescriptorKind::mac ? whitened_mac(map, model) : rmac(map, grid, model);
}

MapLoader directory_loader(std::filesystem::path dir) {
  return [dir = std::move(dir)](const std::string& id) -> std::optional<ActivationMap> {
    const auto path = dir / (id + ".actmap");
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    return read_actmap(path);
  };
}

Index::Index(DescriptorTable table, DescriptorKind kind, PcaModel pca, RegionGridParams grid,
             MapLoader loader)
    : table_(std::move(table)), kind_(kind), pca_(std::move(pca)), grid_(std::move(grid)),
      loader_(std::move(loader)) {
  if (pca_.dim != table_.dim) {
    throw DimensionMismatch("PCA model has " + std::to_string(pca_.dim) + " dimensions, index has " +
                            std::to_string(table_.dim));
  }
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (!positions_.emplace(table_.ids[i], i).second) {
      throw InvalidInput("duplicate image id '" + table_.ids[i] + "' in index");
    }
    double n2 = 0.0;
    for (float v : table_.row(i)) n2 += double(v) * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-5) {
      throw InvalidInput("descriptor of '" + table_.ids[i] + "' is not unit norm");
    }
  }
}

std::optional<std::size_t> Index::find(const std::string& id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.id);
  return out;
}

namespace {

bool ranks_before(const RankedItem& a, const RankedItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

double row_dot(std::span<const float> row, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += double(row[j]) * q[j];
  return s;
}

namespace serial {
void dot_scores(const DescriptorTable& t, std::span<const double> q, std::span<double> out) {
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = row_dot(t.row(i), q);
}
}  // namespace serial

namespace omp {
void dot_scores(const DescriptorTable& t, std::span<const double> q, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[std::size_t(i)] = row_dot(t.row(std::size_t(i)), q);
}
}  // namespace omp

std::size_t clamp_shortlist(int n, std::size_t size) {
  if (n < 1) throw InvalidInput("shortlist size must be >= 1");
  return std::min(std::size_t(n), size);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

RankedList filter_rank(const Index& index, const DescriptorVec& query, Exec exec) {
  if (int(query.size()) != index.dim()) {
    throw DimensionMismatch("query has " + std::to_string(query.size()) + " dimensions, index has " +
                            std::to_string(index.dim()));
  }
  std::vector<double> scores(index.size());
  if (exec == Exec::serial) {
    serial::dot_scores(index.table(), query.values, scores);
  } else {
    omp::dot_scores(index.table(), query.values, scores);
  }
  RankedList out;
  out.stage = Stage::filtered;
  out.items.resize(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.items[i].id = index.table().ids[i];
    out.items[i].score = scores[i];
  }
  std::sort(out.items.begin(), out.items.end(), ranks_before);
  return out;
}

RankedList rerank_aml(const Index& index, const ActivationMap& query_map, const RankedList& shortlist,
                      const RerankParams& params, Exec exec) {
  if (query_map.channels() != index.dim()) {
    throw DimensionMismatch("query map has " + std::to_string(query_map.channels()) +
                            " channels, index has " + std::to_string(index.dim()));
  }
  const std::size_t n = clamp_shortlist(params.shortlist, shortlist.items.size());
  const DescriptorVec query_mac = l2_normalize(mac(query_map));
  const DescriptorVec query_desc = describe(query_map, index.kind(), index.grid(), index.pca());
  const double query_aspect = double(query_map.width()) / query_map.height();
  const PoolingParams pooling{params.search.alpha, RootMode::exact};

  RankedList out = shortlist;
  out.stage = Stage::reranked;

  auto rescore = [&](RankedItem& item) {
    if (!index.find(item.id)) throw InvalidInput("shortlist id '" + item.id + "' is not in the index");
    std::optional<ActivationMap> map;
    try {
      map = index.load_map(item.id);
    } catch (const std::exception&) {
      map.reset();
    }
    if (!map || map->channels() != index.dim()) {
      item.map_missing = true;
      return;
    }
    const auto stack = IntegralStack::build(*map, pooling, Exec::serial);
    auto det = detect_aml(stack, query_mac, query_aspect, params.search, Exec::serial);
    try {
      const auto region_desc = index.kind() == DescriptorKind::mac
                                   ? approx_whitened_mac(stack, det.region, index.pca())
                                   : approx_rmac(stack, det.region, index.grid(), index.pca());
      item.score = dot(query_desc.values, region_desc.values);
      item.detection = det;
      item.region_descriptor = region_desc;
    } catch (const ZeroVectorError&) {
      item.map_missing = true;
    }
  };

  const auto count = static_cast<std::int64_t>(n);
  if (exec == Exec::serial) {
    for (std::int64_t i = 0; i < count; ++i) rescore(out.items[std::size_t(i)]);
  } else {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        rescore(out.items[std::size_t(i)]);
      } catch (...) {
        errors[std::size_t(i)] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::sort(out.items.begin(), out.items.begin() + std::ptrdiff_t(n), ranks_before);
  return out;
}

namespace {

// The descriptor query expansion sees for an item.
double item_dot(const Index& index, const RankedItem& item, std::span<const double> q) {
  if (item.region_descriptor) return dot(item.region_descriptor->values, q);
  const auto pos = index.find(item.id);
  if (!pos) throw InvalidInput("ranked id '" + item.id + "' is not in the index");
  return row_dot(index.table().row(*pos), q);
}

}  // namespace

DescriptorVec expanded_query(const Index& index, const DescriptorVec& query, const RankedList& ranked,
                             const RerankParams& params, const std::optional<std::string>& query_id) {
  if (int(query.size()) != index.dim()) throw DimensionMismatch("query dimension differs from index");
  DescriptorVec sum = query;
  int used = 0;
  for (const auto& item : ranked.items) {
    if (used >= params.qe_top) break;
    if (params.qe_exclude_self && query_id && item.id == *query_id) continue;
    if (item.region_descriptor) {
      const auto& r = item.region_descriptor->values;
      for (std::size_t j = 0; j < r.size(); ++j) sum[j] += r[j];
    } else {
      const auto pos = index.find(item.id);
      if (!pos) throw InvalidInput("ranked id '" + item.id + "' is not in the index");
      const auto row = index.table().row(*pos);
      for (std::size_t j = 0; j < row.size(); ++j) sum[j] += row[j];
    }
    ++used;
  }
  for (double& v : sum.values) v /= double(used + 1);
  return l2_normalize(sum);
}

RankedList query_expand(const Index& index, const DescriptorVec& query, const RankedList& ranked,
                        const RerankParams& params, const std::optional<std::string>& query_id) {
  if (ranked.items.empty()) throw InvalidInput("query expansion needs a non-empty ranking");
  const std::size_t n = clamp_shortlist(params.shortlist, ranked.items.size());
  const auto q = expanded_query(index, query, ranked, params, query_id);
  RankedList out = ranked;
  out.stage = Stage::expanded;
  for (std::size_t i = 0; i < n; ++i) {
    auto& item = out.items[i];
    item.score = item_dot(index, item, q.values);
  }
  std::sort(out.items.begin(), out.items.begin() + std::ptrdiff_t(n), ranks_before);
  return out;
}

RankedList run_query(const Index& index, const ActivationMap& query_map, const QueryStages& stages,
                     const RerankParams& params, const std::optional<std::string>& query_id,
                     QueryTimings* timings, Exec exec) {
  QueryTimings local;
  auto t0 = std::chrono::steady_clock::now();
  const auto query_desc = describe(query_map, index.kind(), index.grid(), index.pca());
  RankedList list = filter_rank(index, query_desc, exec);
  local.filter_ms = elapsed_ms(t0);
  if (stages.aml) {
    t0 = std::chrono::steady_clock::now();
    list = rerank_aml(index, query_map, list, params, exec);
    local.rerank_ms = elapsed_ms(t0);
    local.reranked = clamp_shortlist(params.shortlist, list.items.size());
  }
  if (stages.qe) {
    t0 = std::chrono::steady_clock::now();
    list = query_expand(index, query_desc, list, params, query_id);
    local.qe_ms = elapsed_ms(t0);
  }
  if (timings) *timings = local;
  return list;
}

void write_ranked_list(std::ostream& out, const RankedList& list) {
  char buf[64];
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    const auto& it = list.items[i];
    std::snprintf(buf, sizeof buf, "%.8f", it.score);
    out << (i + 1) << '\t' << it.id << '\t' << buf;
    if (it.detection) {
      const auto& b = it.detection->image_box;
      std::snprintf(buf, sizeof buf, "%.0f,%.0f,%.0f,%.0f", b.x0, b.y0, b.x1, b.y1);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

RankedList read_ranked_list(std::istream& in) {
  RankedList list;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string rank, id, score;
    if (!std::getline(fields, rank, '\t') || !std::getline(fields, id, '\t') ||
        !std::getline(fields, score, '\t')) {
      throw InvalidInput("ranked list line " + std::to_string(lineno) + " is malformed");
    }
    RankedItem item;
    item.id = id;
    item.score = std::stod(score);
    list.items.push_back(std::move(item));
  }
  return list;
}

}  // namespace rmac
