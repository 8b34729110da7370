#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "npy.hpp"
#include "rmac/actmap_codec.hpp"
#include "rmac/descriptor.hpp"
#include "rmac/errors.hpp"
#include "rmac/evaluation.hpp"
#include "rmac/parallel.hpp"
#include "rmac/pooling.hpp"
#include "rmac/synthetic.hpp"

namespace fs = std::filesystem;

namespace rmac::tools {

RegionGridParams RunConfig::grid() const {
  RegionGridParams g;
  g.num_scales = scales;
  return g;
}

SearchParams RunConfig::search() const {
  SearchParams s;
  s.step = step;
  s.aspect_threshold = aspect;
  s.alpha = alpha;
  return s;
}

RerankParams RunConfig::rerank() const {
  RerankParams r;
  r.shortlist = shortlist;
  r.qe_top = qe_top;
  r.qe_exclude_self = qe_exclude_self;
  r.search = search();
  return r;
}

std::string sidecar_path(const std::string& index_path) { return index_path + ".meta"; }

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string printf_str(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// .actmap files named directly or found (non-recursively) in directories,
// sorted by path so every command sees the same order.
std::vector<fs::path> collect_actmaps(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".actmap") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      out.emplace_back(in);
    } else {
      throw InvalidInput("no such file or directory: " + in);
    }
  }
  return out;
}

std::vector<ActivationMap> load_maps(const std::vector<fs::path>& paths) {
  std::vector<ActivationMap> maps(paths.size());
  std::vector<std::string> errors(paths.size());
  const auto n = static_cast<std::int64_t>(paths.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      maps[std::size_t(i)] = read_actmap(paths[std::size_t(i)]);
    } catch (const std::exception& e) {
      errors[std::size_t(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!errors[i].empty()) throw InvalidInput(paths[i].string() + ": " + errors[i]);
  }
  return maps;
}

std::vector<double> parse_numbers(const std::string& s, std::size_t count, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidInput(std::string("bad number '") + tok + "' in " + what);
    }
  }
  if (out.size() != count) {
    throw InvalidInput(std::string(what) + " needs " + std::to_string(count) + " comma-separated values");
  }
  return out;
}

ActivationMap crop_in_feature_space(const ActivationMap& m, const std::string& crop) {
  if (crop.empty()) return m;
  const auto v = parse_numbers(crop, 4, "--crop");
  const auto cells = pixel_box_to_cells(v[0], v[1], v[2], v[3], m.meta(), m.width(), m.height());
  std::cerr << "warning: cropping in feature-map space to cells " << to_string(cells)
            << "; cropping the image before extraction is the faithful alternative\n";
  return m.crop(cells);
}

QueryStages parse_stages(const std::string& s) {
  QueryStages st;
  bool filter = false;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "filter") filter = true;
    else if (tok == "aml") st.aml = true;
    else if (tok == "qe") st.qe = true;
    else throw InvalidInput("unknown stage '" + tok + "' (expected filter, aml, qe)");
  }
  if (!filter) throw InvalidInput("--stages must include filter");
  return st;
}

PcaModel learn_from_corpus(const RunConfig& cfg, const std::vector<std::string>& corpus, int dim) {
  const auto paths = collect_actmaps(corpus);
  if (paths.empty()) throw InsufficientData("PCA corpus has no .actmap files");
  const auto maps = load_maps(paths);
  const auto kind = cfg.descriptor_kind();
  std::vector<std::vector<DescriptorVec>> per_map(maps.size());
  const auto n = static_cast<std::int64_t>(maps.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& m = maps[std::size_t(i)];
    auto& out = per_map[std::size_t(i)];
    if (kind == DescriptorKind::rmac) {
      out = regional_training_vectors(m, cfg.grid());
    } else if (m.nonzeros() > 0) {
      out.push_back(l2_normalize(mac(m, Exec::serial)));
    }
  }
  std::vector<DescriptorVec> samples;
  for (auto& v : per_map) {
    for (auto& d : v) samples.push_back(std::move(d));
  }
  std::string source;
  for (const auto& c : corpus) source += (source.empty() ? "" : ",") + c;
  std::cerr << "learning " << to_string(kind) << " whitening from " << samples.size() << " vectors of "
            << maps.size() << " maps\n";
  return learn_pca(samples, dim, source);
}

Index load_index(const RunConfig& cfg) {
  if (cfg.index_path.empty()) throw InvalidInput("no index given (--index)");
  if (!fs::exists(cfg.index_path)) throw InvalidInput("index file not found: " + cfg.index_path);
  if (cfg.pca_path.empty()) throw InvalidInput("no PCA model given (--pca)");
  auto table = read_descriptors(cfg.index_path);
  auto pca = read_pca(cfg.pca_path);
  return Index(std::move(table), cfg.descriptor_kind(), std::move(pca), cfg.grid(),
               directory_loader(cfg.activation_dir));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out << text;
}

}  // namespace

int cmd_actmap_validate(const ValidateArgs& a) {
  int failures = 0;
  for (const auto& f : a.files) {
    try {
      const auto bytes = read_file_bytes(f);
      const auto st = inspect(bytes);
      const auto m = decode(bytes);
      std::printf("%s\tid=%s W=%d H=%d K=%d nnz=%llu escapes=%llu sparsity=%.2f%% bytes=%llu image=%ux%u\n",
                  f.c_str(), m.meta().image_id.c_str(), st.width, st.height, st.channels,
                  static_cast<unsigned long long>(st.nonzeros), static_cast<unsigned long long>(st.escape_bytes),
                  100.0 * st.sparsity(), static_cast<unsigned long long>(st.total_bytes), m.meta().image_width,
                  m.meta().image_height);
    } catch (const FormatError& e) {
      ++failures;
      std::fprintf(stderr, "%s: invalid: %s\n", f.c_str(), e.what());
    } catch (const std::exception& e) {
      ++failures;
      std::fprintf(stderr, "%s: %s\n", f.c_str(), e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_actmap_import(const ImportArgs& a) {
  if (!a.id.empty() && a.inputs.size() != 1) throw InvalidInput("--id needs exactly one input");
  std::uint32_t img_w = 0, img_h = 0;
  if (!a.image_size.empty()) {
    if (std::sscanf(a.image_size.c_str(), "%ux%u", &img_w, &img_h) != 2) {
      throw InvalidInput("--image-size must look like 1024x768");
    }
  }
  fs::create_directories(a.out_dir);
  int failures = 0;
  for (const auto& in : a.inputs) {
    try {
      const fs::path path(in);
      ActivationMap m;
      if (path.extension() == ".npy") {
        auto t = read_npy_tensor(path);
        t.meta.image_id = a.id.empty() ? path.stem().string() : a.id;
        t.meta.image_width = img_w;
        t.meta.image_height = img_h;
        m = quantize(t);
      } else if (path.extension() == ".actmap") {
        m = read_actmap(path);
        if (!a.id.empty() || m.meta().image_id.empty()) {
          ImageMeta meta = m.meta();
          meta.image_id = a.id.empty() ? path.stem().string() : a.id;
          std::vector<std::uint8_t> levels(m.levels().begin(), m.levels().end());
          m = ActivationMap(m.width(), m.height(), m.channels(), std::move(levels), meta);
        }
      } else {
        throw InvalidInput("expected a .actmap or .npy file");
      }
      const auto out = fs::path(a.out_dir) / (m.meta().image_id + ".actmap");
      const auto bytes = encode(m);
      write_file_bytes(out, bytes);
      const auto st = inspect(bytes);
      std::printf("%s -> %s\tW=%d H=%d K=%d nnz=%llu sparsity=%.2f%% bytes=%zu\n", in.c_str(), out.string().c_str(),
                  st.width, st.height, st.channels, static_cast<unsigned long long>(st.nonzeros),
                  100.0 * st.sparsity(), bytes.size());
    } catch (const FormatError& e) {
      ++failures;
      std::fprintf(stderr, "%s: invalid: %s\n", in.c_str(), e.what());
    } catch (const std::exception& e) {
      ++failures;
      std::fprintf(stderr, "%s: %s\n", in.c_str(), e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_pca_learn(const RunConfig& cfg, const PcaArgs& a) {
  const auto model = learn_from_corpus(cfg, a.corpus, a.dim);
  write_pca(a.out, model);
  std::printf("wrote %s (K=%d, kind=%s)\n", a.out.c_str(), model.dim, cfg.kind.c_str());
  return 0;
}

int cmd_index_build(const RunConfig& cfg, const IndexArgs& a) {
  if (cfg.index_path.empty()) throw InvalidInput("no output index given (--index)");
  const auto kind = cfg.descriptor_kind();
  std::string pca_path = cfg.pca_path;
  PcaModel model;
  if (!a.learn_pca.empty()) {
    model = learn_from_corpus(cfg, a.learn_pca, a.dim);
    if (pca_path.empty()) pca_path = cfg.index_path + ".pca";
    write_pca(pca_path, model);
    std::cerr << "wrote " << pca_path << "\n";
  } else {
    if (pca_path.empty()) throw InvalidInput("index build needs --pca or --learn-pca");
    model = read_pca(pca_path);
  }

  const auto paths = collect_actmaps({cfg.activation_dir});
  if (paths.empty()) throw InvalidInput("no .actmap files in " + cfg.activation_dir);
  const auto maps = load_maps(paths);
  for (const auto& m : maps) {
    if (m.channels() != model.dim) {
      throw DimensionMismatch(m.meta().image_id + " has " + std::to_string(m.channels()) +
                              " channels, PCA model has " + std::to_string(model.dim));
    }
  }
  std::vector<std::optional<DescriptorVec>> desc(maps.size());
  const auto n = static_cast<std::int64_t>(maps.size());
  const auto t0 = Clock::now();
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      desc[std::size_t(i)] = describe(maps[std::size_t(i)], kind, cfg.grid(), model);
    } catch (const ZeroVectorError&) {
      desc[std::size_t(i)].reset();
    }
  }
  DescriptorTable table;
  table.dim = model.dim;
  int skipped = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto id = paths[i].stem().string();
    if (!desc[i]) {
      std::cerr << "warning: " << id << " has no usable activations, left out of the index\n";
      ++skipped;
      continue;
    }
    if (!maps[i].meta().image_id.empty() && maps[i].meta().image_id != id) {
      std::cerr << "warning: " << paths[i].string() << " carries id '" << maps[i].meta().image_id
                << "', indexed as '" << id << "'\n";
    }
    table.append(id, *desc[i]);
  }
  write_descriptors(cfg.index_path, table);

  std::ofstream meta(sidecar_path(cfg.index_path));
  meta << "# written by index build\n"
       << "kind = " << to_string(kind) << "\n"
       << "scales = " << cfg.scales << "\n"
       << "pca = " << fs::absolute(pca_path).string() << "\n"
       << "activation-dir = " << fs::absolute(cfg.activation_dir).string() << "\n";
  std::printf("indexed %zu images (%d skipped) as %s, K=%d, in %.1f ms -> %s\n", table.size(), skipped,
              std::string(to_string(kind)).c_str(), table.dim, ms_since(t0), cfg.index_path.c_str());
  return 0;
}

int cmd_query(const RunConfig& cfg, const QueryArgs& a) {
  const auto index = load_index(cfg);
  const auto full = read_actmap(a.query);
  const auto query_map = crop_in_feature_space(full, a.crop);
  const auto stages = parse_stages(a.stages);
  std::optional<std::string> query_id;
  if (!a.query_id.empty()) query_id = a.query_id;
  else if (!full.meta().image_id.empty()) query_id = full.meta().image_id;

  QueryTimings t;
  const auto list = run_query(index, query_map, stages, cfg.rerank(), query_id, &t);
  std::ostringstream out;
  write_ranked_list(out, list);
  write_text(a.out, out.str());

  std::fprintf(stderr, "filter: %.3f ms over %zu images\n", t.filter_ms, index.size());
  if (stages.aml) {
    std::fprintf(stderr, "re-rank: %.1f ms for %zu images (%.3f ms per image)\n", t.rerank_ms, t.reranked,
                 t.reranked ? t.rerank_ms / double(t.reranked) : 0.0);
  }
  if (stages.qe) std::fprintf(stderr, "query expansion: %.3f ms\n", t.qe_ms);
  std::size_t missing = 0;
  for (const auto& it : list.items) missing += it.map_missing;
  if (missing) std::fprintf(stderr, "warning: %zu re-ranked images had no usable map\n", missing);
  return 0;
}

int cmd_localize(const RunConfig& cfg, const LocalizeArgs& a) {
  const auto query = crop_in_feature_space(read_actmap(a.query), a.crop);
  const auto target = read_actmap(a.target);
  if (query.channels() != target.channels()) {
    throw DimensionMismatch("query and target have different channel counts");
  }
  const auto stack = IntegralStack::build(target, PoolingParams{cfg.alpha, RootMode::exact});
  const auto q = mac(query);
  const auto t0 = Clock::now();
  auto det = a.exhaustive ? detect_exhaustive(stack, q)
                          : detect_aml(stack, q, double(query.width()) / query.height(), cfg.search());
  const double ms = ms_since(t0);
  det.image_box = map_region_to_image(det.region, target.meta(), target.width(), target.height());
  const auto total = exhaustive_window_count(target.width(), target.height());
  std::printf("region\t%d,%d,%d,%d\n", det.region.x0, det.region.y0, det.region.x1, det.region.y1);
  std::printf("box\t%.0f,%.0f,%.0f,%.0f\n", det.image_box.x0, det.image_box.y0, det.image_box.x1,
              det.image_box.y1);
  std::printf("score\t%.8f\n", det.score);
  std::printf("windows\t%llu of %llu (%.3f%%)\n", static_cast<unsigned long long>(det.windows_evaluated),
              static_cast<unsigned long long>(total), 100.0 * double(det.windows_evaluated) / double(total));
  if (!a.exhaustive) std::printf("refine_rounds\t%d\n", det.refine_rounds);
  if (det.aspect_fallback) std::printf("aspect_fallback\tyes\n");
  std::fprintf(stderr, "search took %.2f ms\n", ms);
  return 0;
}

int cmd_regions_dump(const RunConfig& cfg, const RegionsArgs& a) {
  const auto by_scale = region_grid_by_scale(a.width, a.height, cfg.grid());
  std::printf("scale,index,x0,y0,x1,y1,side\n");
  for (std::size_t s = 0; s < by_scale.size(); ++s) {
    for (std::size_t i = 0; i < by_scale[s].size(); ++i) {
      const auto& r = by_scale[s][i];
      std::printf("%zu,%zu,%d,%d,%d,%d,%d\n", s + 1, i, r.x0, r.y0, r.x1, r.y1, r.width());
    }
  }
  return 0;
}

namespace {

std::vector<GroundTruth> load_truth(const RunConfig& cfg) {
  if (cfg.ground_truth_dir.empty()) throw InvalidInput("no ground truth given (--ground-truth)");
  if (!fs::is_directory(cfg.ground_truth_dir)) throw InvalidInput("not a directory: " + cfg.ground_truth_dir);
  auto truth = load_ground_truth(cfg.ground_truth_dir);
  if (truth.empty()) throw InvalidInput("no *_query.txt files in " + cfg.ground_truth_dir);
  return truth;
}

ActivationMap load_query_crop(const RunConfig& cfg, const GroundTruth& gt) {
  const auto full = read_actmap(fs::path(cfg.activation_dir) / (gt.query_image + ".actmap"));
  const auto cells = pixel_box_to_cells(gt.box.x0, gt.box.y0, gt.box.x1, gt.box.y1, full.meta(), full.width(),
                                        full.height());
  return full.crop(cells);
}

}  // namespace

int cmd_eval_map(const RunConfig& cfg, const EvalMapArgs& a) {
  const auto truth = load_truth(cfg);
  std::vector<std::vector<std::string>> rankings;
  if (!a.rankings.empty()) {
    for (const auto& gt : truth) {
      std::ifstream in(fs::path(a.rankings) / (gt.name + ".txt"));
      if (!in) throw InvalidInput("missing ranked list for " + gt.name + " in " + a.rankings);
      rankings.push_back(read_ranked_list(in).ids());
    }
  } else {
    const auto index = load_index(cfg);
    const auto stages = parse_stages(a.stages);
    for (const auto& gt : truth) {
      const auto q = load_query_crop(cfg, gt);
      rankings.push_back(run_query(index, q, stages, cfg.rerank(), gt.query_image).ids());
    }
  }
  const auto rep = evaluate_map(rankings, truth);
  std::ostringstream out;
  out << "query,ap\n";
  for (const auto& [name, ap] : rep.per_query) out << name << ',' << printf_str("%.6f", ap) << '\n';
  out << "mAP," << printf_str("%.6f", rep.map) << '\n';
  write_text(a.out, out.str());
  if (rep.per_query.empty()) {
    std::cerr << "error: no query has positives\n";
    return 1;
  }
  return 0;
}

int cmd_eval_iou(const RunConfig& cfg, const EvalIouArgs& a) {
  const auto truth = load_truth(cfg);
  std::map<std::string, std::vector<IouSample>> by_group;
  for (const auto& gt : truth) {
    const auto m = read_actmap(fs::path(cfg.activation_dir) / (gt.query_image + ".actmap"));
    by_group[query_group(gt.name)].push_back({m, gt.box});
  }
  std::vector<std::vector<IouSample>> groups;
  for (auto& [name, g] : by_group) groups.push_back(std::move(g));
  const auto t0 = Clock::now();
  const auto rep = evaluate_iou_protocol(groups, cfg.search());
  const double ms = ms_since(t0);
  std::ostringstream out;
  out << "t,s,pairs,skipped_groups,iou_exhaustive,iou_aml,iou_aml_vs_optimal,windows_pct\n";
  out << cfg.step << ',' << cfg.aspect << ',' << rep.pairs << ',' << rep.skipped_groups << ','
      << printf_str("%.4f,%.4f,%.4f,%.4f", rep.mean_iou_exhaustive, rep.mean_iou_aml, rep.mean_iou_aml_vs_optimal,
                    100.0 * rep.mean_window_fraction)
      << '\n';
  write_text(a.out, out.str());
  std::fprintf(stderr, "%zu pairs in %.1f ms\n", rep.pairs, ms);
  if (rep.pairs == 0) {
    std::cerr << "error: no group has two or more annotated images\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg, const BenchArgs& a) {
  std::vector<ActivationMap> maps;
  PcaModel model;
  if (a.synthetic > 0 || cfg.index_path.empty()) {
    const int n = a.synthetic > 0 ? a.synthetic : 200;
    const auto db = synth::make_planted_database(cfg.seed, n, std::max(1, n / 6), 5, 40);
    maps = db.database;
    std::vector<DescriptorVec> training;
    for (const auto& m : db.training) {
      if (cfg.descriptor_kind() == DescriptorKind::rmac) {
        for (auto& v : regional_training_vectors(m, cfg.grid())) training.push_back(std::move(v));
      } else {
        training.push_back(l2_normalize(mac(m)));
      }
    }
    model = learn_pca(training);
    std::printf("corpus\tsynthetic, %zu maps of 30x22x32, seed %llu\n", maps.size(),
                static_cast<unsigned long long>(cfg.seed));
  } else {
    const auto index = load_index(cfg);
    model = index.pca();
    for (const auto& id : index.table().ids) {
      if (auto m = index.load_map(id)) maps.push_back(std::move(*m));
    }
    std::printf("corpus\t%zu maps from %s\n", maps.size(), cfg.activation_dir.c_str());
  }
  if (maps.empty()) throw InvalidInput("nothing to benchmark");
  std::printf("threads\t%d\n", thread_count());

  // integral image construction
  for (auto exec : {Exec::serial, Exec::parallel}) {
    const auto t0 = Clock::now();
    double checksum = 0.0;
    for (const auto& m : maps) checksum += IntegralStack::build(m, {cfg.alpha}, exec).at(0, m.width(), m.height());
    std::printf("integral_build_%s\t%.3f ms per map (checksum %.6g)\n", exec == Exec::serial ? "serial" : "omp",
                ms_since(t0) / double(maps.size()), checksum);
  }

  // descriptor table, then filtering throughput at n and 2n entries
  DescriptorTable table;
  table.dim = model.dim;
  for (const auto& m : maps) {
    try {
      table.append(m.meta().image_id, describe(m, cfg.descriptor_kind(), cfg.grid(), model));
    } catch (const ZeroVectorError&) {
    }
  }
  const auto q = table.descriptor(0);
  double per_vector_ms[2] = {0.0, 0.0};
  for (int doubling = 0; doubling < 2; ++doubling) {
    DescriptorTable t = table;
    if (doubling) {
      for (std::size_t i = 0; i < table.size(); ++i) t.append(table.ids[i] + "_dup", table.descriptor(i));
    }
    const Index index(t, cfg.descriptor_kind(), model, cfg.grid(),
                      [](const std::string&) { return std::optional<ActivationMap>{}; });
    const int reps = std::max(1, 200000 / int(t.size()));
    std::vector<std::string> first;
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
      auto list = filter_rank(index, q);
      if (r == 0) first = list.ids();
    }
    const double ms = ms_since(t0) / reps;
    per_vector_ms[doubling] = ms / double(t.size());
    std::printf("filter_%zu\t%.4f ms per query, %.3g vectors/s\n", t.size(), ms, double(t.size()) / (ms / 1000.0));
  }
  std::printf("filter_scaling\t%.2f (time ratio per vector, 2n vs n)\n", per_vector_ms[1] / per_vector_ms[0]);

  // AML search speed
  const std::size_t m_count = std::min<std::size_t>(maps.size(), std::size_t(std::max(1, a.aml_maps)));
  const auto query = mac(maps[0]);
  const double aspect = double(maps[0].width()) / maps[0].height();
  std::vector<IntegralStack> stacks;
  for (std::size_t i = 0; i < m_count; ++i) stacks.push_back(IntegralStack::build(maps[i], {cfg.alpha}));
  for (auto exec : {Exec::serial, Exec::parallel}) {
    std::uint64_t windows = 0;
    const auto t0 = Clock::now();
    for (const auto& s : stacks) windows += detect_aml(s, query, aspect, cfg.search(), exec).windows_evaluated;
    const double ms = ms_since(t0);
    std::printf("aml_%s\t%.3f ms per image, %.3g windows/s\n", exec == Exec::serial ? "serial" : "omp",
                ms / double(m_count), double(windows) / (ms / 1000.0));
  }
  return 0;
}

int cmd_synth(const RunConfig& cfg, const SynthArgs& a) {
  const auto db = synth::make_planted_database(cfg.seed, a.database, a.planted, a.queries, a.training);
  const fs::path root(a.out_dir);
  for (const char* sub : {"db", "train", "queries", "gt"}) fs::create_directories(root / sub);
  for (const auto& m : db.database) write_actmap(root / "db" / (m.meta().image_id + ".actmap"), m);
  for (const auto& m : db.training) write_actmap(root / "train" / (m.meta().image_id + ".actmap"), m);
  for (const auto& m : db.queries) write_actmap(root / "queries" / (m.meta().image_id + ".actmap"), m);

  // One ground-truth query per planted occurrence, Oxford style: the query is
  // the planted box in a database image, the other occurrences are positives.
  int written = 0;
  for (std::size_t q = 0; q < db.queries.size(); ++q) {
    int k = 0;
    for (std::size_t i = 0; i < db.database.size(); ++i) {
      const auto& id = db.database[i].meta().image_id;
      if (!db.positives[q].count(id) || !db.planted[i]) continue;
      const auto& m = db.database[i];
      const auto box = map_region_to_image(*db.planted[i], m.meta(), m.width(), m.height());
      const std::string name = db.query_names[q] + "_" + std::to_string(++k);
      std::ofstream(root / "gt" / (name + "_query.txt"))
          << id << ' ' << box.x0 << ' ' << box.y0 << ' ' << box.x1 << ' ' << box.y1 << '\n';
      std::ofstream good(root / "gt" / (name + "_good.txt"));
      for (const auto& p : db.positives[q]) good << p << '\n';
      ++written;
    }
  }
  std::printf("wrote %zu database, %zu training and %zu query maps, %d ground-truth queries under %s\n",
              db.database.size(), db.training.size(), db.queries.size(), written, a.out_dir.c_str());
  return 0;
}

}  // namespace rmac::tools
