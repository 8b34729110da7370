#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/descriptor.hpp"
#include "rmac/localizer.hpp"
#include "rmac/parallel.hpp"

namespace rmac {

enum class DescriptorKind { mac, rmac };

DescriptorKind parse_descriptor_kind(std::string_view s);
std::string_view to_string(DescriptorKind k);

/// Database-side descriptor of one image: whitened MAC or R-MAC.
DescriptorVec describe(const ActivationMap& map, DescriptorKind kind, const RegionGridParams& grid,
                       const PcaModel& model);

/// Returns the activation map of a database image, or nullopt if it is
/// unavailable. Must be safe to call from several threads.
using MapLoader = std::function<std::optional<ActivationMap>(const std::string& id)>;

/// Loads `<dir>/<id>.actmap`.
MapLoader directory_loader(std::filesystem::path dir);

/// Immutable database: unit descriptors plus what is needed to re-describe
/// detected regions at query time.
class Index {
 public:
  /// Throws InvalidInput on duplicate ids or non-unit descriptors and
  /// DimensionMismatch when the PCA model does not match.
  Index(DescriptorTable table, DescriptorKind kind, PcaModel pca, RegionGridParams grid,
        MapLoader loader);

  const DescriptorTable& table() const noexcept { return table_; }
  DescriptorKind kind() const noexcept { return kind_; }
  const PcaModel& pca() const noexcept { return pca_; }
  const RegionGridParams& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return table_.size(); }
  int dim() const noexcept { return table_.dim; }

  std::optional<std::size_t> find(const std::string& id) const;
  std::optional<ActivationMap> load_map(const std::string& id) const { return loader_(id); }

 private:
  DescriptorTable table_;
  DescriptorKind kind_;
  PcaModel pca_;
  RegionGridParams grid_;
  MapLoader loader_;
  std::unordered_map<std::string, std::size_t> positions_;
};

struct RerankParams {
  int shortlist = 1000;  // N
  int qe_top = 5;
  bool qe_exclude_self = true;
  SearchParams search;
};

enum class Stage { filtered, reranked, expanded };
std::string_view to_string(Stage s);

struct RankedItem {
  std::string id;
  double score = 0.0;
  std::optional<DetectionResult> detection;
  // Descriptor of the detected region, set by re-ranking. Query expansion
  // uses it in place of the stored whole-image descriptor.
  std::optional<DescriptorVec> region_descriptor;
  bool map_missing = false;  // re-ranking could not load or use the map
};

/// Scores are non-increasing; equal scores are ordered by id.
struct RankedList {
  std::vector<RankedItem> items;
  Stage stage = Stage::filtered;

  std::vector<std::string> ids() const;
};

/// Cosine ranking of the whole database (dot products of unit vectors).
RankedList filter_rank(const Index& index, const DescriptorVec& query, Exec exec = Exec::parallel);

/// Localizes the query in each of the top-N images and re-scores them by the
/// similarity between the query descriptor and the detected region's
/// descriptor (same kind as the index). Items past N keep their order.
RankedList rerank_aml(const Index& index, const ActivationMap& query_map, const RankedList& shortlist,
                      const RerankParams& params, Exec exec = Exec::parallel);

/// Averages the query descriptor with the descriptors of the top `qe_top`
/// items, normalizes, and re-scores the top-N block with it. An item's
/// descriptor is its detected-region descriptor when re-ranking produced one
/// and its stored index descriptor otherwise. `query_id` is skipped when
/// params.qe_exclude_self is set.
RankedList query_expand(const Index& index, const DescriptorVec& query, const RankedList& ranked,
                        const RerankParams& params, const std::optional<std::string>& query_id = {});

/// The expanded query vector used by query_expand.
DescriptorVec expanded_query(const Index& index, const DescriptorVec& query, const RankedList& ranked,
                             const RerankParams& params, const std::optional<std::string>& query_id);

struct QueryStages {
  bool aml = false;
  bool qe = false;
};

struct QueryTimings {
  double filter_ms = 0.0;
  double rerank_ms = 0.0;
  double qe_ms = 0.0;
  std::size_t reranked = 0;
};

/// filter [-> AML re-rank] [-> query expansion] for one cropped query map.
RankedList run_query(const Index& index, const ActivationMap& query_map, const QueryStages& stages,
                     const RerankParams& params, const std::optional<std::string>& query_id = {},
                     QueryTimings* timings = nullptr, Exec exec = Exec::parallel);

/// One line per item: rank<TAB>id<TAB>score[<TAB>x0,y0,x1,y1] (pixel box).
void write_ranked_list(std::ostream& out, const RankedList& list);
/// Reads ids and scores back; detections are not reconstructed.
RankedList read_ranked_list(std::istream& in);

}  // namespace rmac
