#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmac/localizer.hpp"
#include "rmac/region_grid.hpp"
#include "rmac/retrieval.hpp"

namespace rmac::tools {

// Settings shared by every command. Filled from the config file, then flags,
// then (for values still unset) the sidecar written next to an index.
struct RunConfig {
  std::string activation_dir = ".";
  std::string index_path;
  std::string pca_path;
  std::string ground_truth_dir;
  std::string kind = "rmac";
  int scales = 3;
  double alpha = 10.0;
  int step = 3;
  double aspect = 1.1;
  int shortlist = 1000;
  int qe_top = 5;
  bool qe_exclude_self = true;
  int threads = 0;
  std::uint64_t seed = 20160;

  DescriptorKind descriptor_kind() const { return parse_descriptor_kind(kind); }
  RegionGridParams grid() const;
  SearchParams search() const;
  RerankParams rerank() const;
};

struct ValidateArgs {
  std::vector<std::string> files;
};
struct ImportArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  std::string id;
  std::string image_size;  // WxH, for dense input
};
struct PcaArgs {
  std::vector<std::string> corpus;
  std::string out;
  int dim = 0;
};
struct IndexArgs {
  std::vector<std::string> learn_pca;
  int dim = 0;
};
struct QueryArgs {
  std::string query;
  std::string crop;
  std::string stages = "filter,aml,qe";
  std::string out;
  std::string query_id;
};
struct LocalizeArgs {
  std::string query;
  std::string target;
  std::string crop;
  bool exhaustive = false;
};
struct RegionsArgs {
  int width = 0;
  int height = 0;
};
struct EvalMapArgs {
  std::string rankings;
  std::string stages = "filter,aml,qe";
  std::string out;
};
struct EvalIouArgs {
  std::string out;
};
struct BenchArgs {
  int synthetic = 0;
  int aml_maps = 20;
};
struct SynthArgs {
  std::string out_dir;
  int database = 60;
  int planted = 10;
  int queries = 5;
  int training = 40;
};

int cmd_actmap_validate(const ValidateArgs& a);
int cmd_actmap_import(const ImportArgs& a);
int cmd_pca_learn(const RunConfig& cfg, const PcaArgs& a);
int cmd_index_build(const RunConfig& cfg, const IndexArgs& a);
int cmd_query(const RunConfig& cfg, const QueryArgs& a);
int cmd_localize(const RunConfig& cfg, const LocalizeArgs& a);
int cmd_regions_dump(const RunConfig& cfg, const RegionsArgs& a);
int cmd_eval_map(const RunConfig& cfg, const EvalMapArgs& a);
int cmd_eval_iou(const RunConfig& cfg, const EvalIouArgs& a);
int cmd_bench(const RunConfig& cfg, const BenchArgs& a);
int cmd_synth(const RunConfig& cfg, const SynthArgs& a);

/// `<index>.meta`, the key = value sidecar recording how an index was built.
std::string sidecar_path(const std::string& index_path);

}  // namespace rmac::tools
