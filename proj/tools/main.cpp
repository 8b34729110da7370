#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "rmac/parallel.hpp"

using namespace rmac::tools;

namespace {

// Values recorded by `index build` fill in whatever the config file and the
// flags left unset.
void apply_sidecar(const std::string& index_path, const std::map<std::string, CLI::Option*>& opts) {
  std::ifstream in(sidecar_path(index_path));
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](const std::string& s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const auto key = trim(line.substr(0, eq));
    const auto it = opts.find(key);
    if (it == opts.end() || it->second->count() > 0) continue;
    it->second->add_result(trim(line.substr(eq + 1)));
    it->second->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval and localization over quantized CNN activation maps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; flags override it");
  app.fallthrough();

  RunConfig cfg;
  std::map<std::string, CLI::Option*> sidecar_opts;
  app.add_option("--activation-dir", cfg.activation_dir, "Directory of <id>.actmap files")->capture_default_str();
  app.add_option("--index", cfg.index_path, "Descriptor index file");
  sidecar_opts["pca"] = app.add_option("--pca", cfg.pca_path, "Whitening model file");
  app.add_option("--ground-truth", cfg.ground_truth_dir, "Directory of <query>_{query,good,ok,junk}.txt");
  sidecar_opts["kind"] =
      app.add_option("--kind", cfg.kind, "Descriptor kind")->check(CLI::IsMember({"mac", "rmac"}))->capture_default_str();
  sidecar_opts["scales"] =
      app.add_option("--scales", cfg.scales, "R-MAC scales L")->check(CLI::Range(1, 16))->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Generalized-mean exponent")->check(CLI::Range(1.0, 64.0))->capture_default_str();
  app.add_option("--step", cfg.step, "AML grid step t")->check(CLI::Range(1, 1000))->capture_default_str();
  app.add_option("--aspect", cfg.aspect, "AML aspect-ratio tolerance s")->check(CLI::Range(1.0, 1e9))->capture_default_str();
  app.add_option("--shortlist", cfg.shortlist, "Re-ranked short-list size N")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--qe-top", cfg.qe_top, "Images merged by query expansion")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_flag("--qe-exclude-self,!--no-qe-exclude-self", cfg.qe_exclude_self,
               "Skip the query's own image when expanding");
  app.add_option("--threads", cfg.threads, "Worker threads (0 = all, capped by RMAC_THREADS)")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for synthetic data")->capture_default_str();
  // the activation directory is recorded last so an explicit flag still wins
  sidecar_opts["activation-dir"] = app.get_option("--activation-dir");

  auto* actmap = app.add_subcommand("actmap", "Validate or import activation files");
  actmap->require_subcommand(1);
  ValidateArgs validate;
  auto* validate_cmd = actmap->add_subcommand("validate", "Check .actmap files and print their statistics");
  validate_cmd->add_option("files", validate.files, "Files to check")->required();
  ImportArgs import;
  auto* import_cmd = actmap->add_subcommand("import", "Validate .actmap or quantize .npy (K,H,W) tensors into a store");
  import_cmd->add_option("inputs", import.inputs, ".actmap or .npy files")->required();
  import_cmd->add_option("--out-dir", import.out_dir, "Store directory")->required();
  import_cmd->add_option("--id", import.id, "Image id (single input only)");
  import_cmd->add_option("--image-size", import.image_size, "Source image size WxH for dense input");

  auto* pca = app.add_subcommand("pca", "Whitening models");
  pca->require_subcommand(1);
  PcaArgs pca_args;
  auto* learn_cmd = pca->add_subcommand("learn", "Learn PCA-whitening from a corpus");
  learn_cmd->add_option("--corpus", pca_args.corpus, "Files or directories of .actmap")->required();
  learn_cmd->add_option("--out", pca_args.out, "Output model")->required();
  learn_cmd->add_option("--dim", pca_args.dim, "Keep only the leading components (0 = all)");

  auto* index = app.add_subcommand("index", "Descriptor index");
  index->require_subcommand(1);
  IndexArgs index_args;
  auto* build_cmd = index->add_subcommand("build", "Describe every map in --activation-dir into --index");
  build_cmd->add_option("--learn-pca", index_args.learn_pca, "Learn the whitening on this corpus first");
  build_cmd->add_option("--dim", index_args.dim, "PCA output dimension when learning");

  QueryArgs query_args;
  auto* query_cmd = app.add_subcommand("query", "Rank the index for one query map");
  query_cmd->add_option("--query", query_args.query, "Query .actmap")->required();
  query_cmd->add_option("--crop", query_args.crop, "Pixel box x0,y0,x1,y1 cropped in feature-map space");
  query_cmd->add_option("--stages", query_args.stages, "filter[,aml][,qe]")->capture_default_str();
  query_cmd->add_option("--out", query_args.out, "Ranked list file (default stdout)");
  query_cmd->add_option("--query-id", query_args.query_id, "Database id of the query image");

  LocalizeArgs loc_args;
  auto* loc_cmd = app.add_subcommand("localize", "Find the query object in one target map");
  loc_cmd->add_option("--query", loc_args.query, "Query .actmap")->required();
  loc_cmd->add_option("--target", loc_args.target, "Target .actmap")->required();
  loc_cmd->add_option("--crop", loc_args.crop, "Pixel box x0,y0,x1,y1 applied to the query");
  loc_cmd->add_flag("--exhaustive", loc_args.exhaustive, "Evaluate every window instead of AML");

  auto* regions = app.add_subcommand("regions", "Region grid");
  regions->require_subcommand(1);
  RegionsArgs reg_args;
  auto* dump_cmd = regions->add_subcommand("dump", "Print the R-MAC grid as CSV");
  dump_cmd->set_help_flag("--help", "Print this help message and exit");
  dump_cmd->add_option("--w", reg_args.width, "Map width")->required()->check(CLI::PositiveNumber);
  dump_cmd->add_option("--h", reg_args.height, "Map height")->required()->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluation protocols");
  eval->require_subcommand(1);
  EvalMapArgs map_args;
  auto* map_cmd = eval->add_subcommand("map", "Mean average precision over --ground-truth");
  map_cmd->add_option("--rankings", map_args.rankings, "Directory of <query>.txt ranked lists (else run queries)");
  map_cmd->add_option("--stages", map_args.stages, "Stages when running queries")->capture_default_str();
  map_cmd->add_option("--out", map_args.out, "CSV output (default stdout)");
  EvalIouArgs iou_args;
  auto* iou_cmd = eval->add_subcommand("iou", "Localization IoU between annotated images of each landmark");
  iou_cmd->add_option("--out", iou_args.out, "CSV output (default stdout)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Throughput of the serial and OpenMP kernels");
  bench_cmd->add_option("--synthetic", bench_args.synthetic, "Generate this many maps instead of using --index");
  bench_cmd->add_option("--aml-maps", bench_args.aml_maps, "Maps searched by the AML timing")->capture_default_str();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a planted-object corpus with ground truth");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
  synth_cmd->add_option("--database", synth_args.database)->capture_default_str();
  synth_cmd->add_option("--planted", synth_args.planted)->capture_default_str();
  synth_cmd->add_option("--queries", synth_args.queries)->capture_default_str();
  synth_cmd->add_option("--training", synth_args.training)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!cfg.index_path.empty()) apply_sidecar(cfg.index_path, sidecar_opts);
    rmac::set_thread_count(cfg.threads);

    if (validate_cmd->parsed()) return cmd_actmap_validate(validate);
    if (import_cmd->parsed()) return cmd_actmap_import(import);
    if (learn_cmd->parsed()) return cmd_pca_learn(cfg, pca_args);
    if (build_cmd->parsed()) return cmd_index_build(cfg, index_args);
    if (query_cmd->parsed()) return cmd_query(cfg, query_args);
    if (loc_cmd->parsed()) return cmd_localize(cfg, loc_args);
    if (dump_cmd->parsed()) return cmd_regions_dump(cfg, reg_args);
    if (map_cmd->parsed()) return cmd_eval_map(cfg, map_args);
    if (iou_cmd->parsed()) return cmd_eval_iou(cfg, iou_args);
    if (bench_cmd->parsed()) return cmd_bench(cfg, bench_args);
    if (synth_cmd->parsed()) return cmd_synth(cfg, synth_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
