// Serial reference vs OpenMP for each data-parallel kernel. Arg 0 is serial,
// arg 1 the OpenMP path; RMAC_THREADS caps the thread count as usual.

#include <benchmark/benchmark.h>

#include <vector>

#include "rmac/approx_quality.hpp"
#include "rmac/localizer.hpp"
#include "rmac/parallel.hpp"
#include "rmac/pooling.hpp"
#include "rmac/retrieval.hpp"
#include "rmac/synthetic.hpp"

using namespace rmac;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

const synth::PlantedPair& pair() {
  static const synth::PlantedPair p = [] {
    synth::Rng rng(7);
    return synth::make_planted_pair(synth::SceneParams{}, rng, 0);
  }();
  return p;
}

void BM_IntegralBuild(benchmark::State& st) {
  const auto& map = pair().target.map;
  for (auto _ : st) benchmark::DoNotOptimize(IntegralStack::build(map, {}, exec_of(st)));
}

void BM_FilterRank(benchmark::State& st) {
  static const Index index = [] {
    synth::Rng rng(11);
    DescriptorTable t;
    t.dim = 512;
    std::normal_distribution<double> g;
    for (int i = 0; i < 20000; ++i) {
      std::vector<double> v(512);
      for (double& x : v) x = g(rng);
      t.append("img" + std::to_string(i), l2_normalize(DescriptorVec(std::move(v), Norm::raw)));
    }
    return Index(std::move(t), DescriptorKind::mac, PcaModel::identity(512), {},
                 [](const std::string&) { return std::optional<ActivationMap>{}; });
  }();
  const auto q = index.table().descriptor(0);
  for (auto _ : st) benchmark::DoNotOptimize(filter_rank(index, q, exec_of(st)));
  st.SetItemsProcessed(std::int64_t(st.iterations()) * std::int64_t(index.size()));
}

void BM_DetectExhaustive(benchmark::State& st) {
  const auto stack = IntegralStack::build(pair().target.map);
  const auto q = mac(pair().query);
  for (auto _ : st) benchmark::DoNotOptimize(detect_exhaustive(stack, q, exec_of(st)));
}

void BM_DetectAml(benchmark::State& st) {
  const auto stack = IntegralStack::build(pair().target.map);
  const auto q = mac(pair().query);
  const double aspect = double(pair().query.width()) / pair().query.height();
  for (auto _ : st) benchmark::DoNotOptimize(detect_aml(stack, q, aspect, {}, exec_of(st)));
}

void BM_CosineStats(benchmark::State& st) {
  synth::Rng rng(13);
  const std::vector<DenseTensor> maps{synth::random_dense(16, 12, 32, 0.9, 300.0, rng)};
  for (auto _ : st) benchmark::DoNotOptimize(approximation_cosine_stats(maps, 10.0, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_IntegralBuild)->Arg(0)->Arg(1);
BENCHMARK(BM_FilterRank)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DetectExhaustive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DetectAml)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CosineStats)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
