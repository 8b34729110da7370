#include <doctest.h>

#include <map>
#include <sstream>

#include "rmac/errors.hpp"
#include "rmac/retrieval.hpp"
#include "rmac/synthetic.hpp"

using namespace rmac;

namespace {

DescriptorVec unit(std::vector<double> v) { return l2_normalize(DescriptorVec(std::move(v), Norm::raw)); }

MapLoader none_loader() {
  return [](const std::string&) { return std::optional<ActivationMap>{}; };
}

Index toy_index() {
  DescriptorTable t;
  t.dim = 2;
  t.append("c", unit({0.0, 1.0}));
  t.append("a", unit({1.0, 0.0}));
  t.append("b", unit({0.6, 0.8}));
  return Index(t, DescriptorKind::mac, PcaModel::identity(2), {}, none_loader());
}

}  // namespace

TEST_CASE("descriptor kind names") {
  CHECK(parse_descriptor_kind("mac") == DescriptorKind::mac);
  CHECK(parse_descriptor_kind("rmac") == DescriptorKind::rmac);
  CHECK(to_string(DescriptorKind::rmac) == "rmac");
  CHECK_THROWS_AS(parse_descriptor_kind("gem"), InvalidInput);
}

TEST_CASE("index validation") {
  DescriptorTable t;
  t.dim = 2;
  t.append("a", unit({1.0, 0.0}));
  t.append("a", unit({0.0, 1.0}));
  CHECK_THROWS_AS(Index(t, DescriptorKind::mac, PcaModel::identity(2), {}, none_loader()), InvalidInput);

  DescriptorTable raw;
  raw.dim = 2;
  raw.append("a", DescriptorVec(std::vector<double>{2.0, 0.0}, Norm::raw));
  CHECK_THROWS_AS(Index(raw, DescriptorKind::mac, PcaModel::identity(2), {}, none_loader()), InvalidInput);

  CHECK_THROWS_AS(Index(DescriptorTable{2, {}, {}}, DescriptorKind::mac, PcaModel::identity(3), {}, none_loader()),
                  DimensionMismatch);
}

TEST_CASE("filter ranking by cosine") {
  auto index = toy_index();
  auto r = filter_rank(index, unit({1.0, 0.0}));
  REQUIRE(r.items.size() == 3);
  CHECK(r.ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK(r.items[0].score == doctest::Approx(1.0));
  CHECK(r.items[1].score == doctest::Approx(0.6));
  CHECK(r.items[2].score == doctest::Approx(0.0));
  CHECK(r.stage == Stage::filtered);
  CHECK(filter_rank(index, unit({1.0, 0.0}), Exec::serial).ids() == r.ids());
  CHECK_THROWS_AS(filter_rank(index, unit({1.0, 0.0, 0.0})), DimensionMismatch);
}

TEST_CASE("ties are broken by id") {
  DescriptorTable t;
  t.dim = 2;
  t.append("z", unit({1.0, 1.0}));
  t.append("m", unit({1.0, 1.0}));
  t.append("b", unit({1.0, 1.0}));
  Index index(t, DescriptorKind::mac, PcaModel::identity(2), {}, none_loader());
  CHECK(filter_rank(index, unit({1.0, 0.0})).ids() == std::vector<std::string>{"b", "m", "z"});
}

TEST_CASE("query expansion arithmetic") {
  auto index = toy_index();
  auto q = unit({1.0, 0.0});
  auto ranked = filter_rank(index, q);
  RerankParams p;
  p.qe_top = 2;
  p.shortlist = 3;
  auto e = expanded_query(index, q, ranked, p, std::nullopt);
  auto want = unit({2.6, 0.8});
  CHECK(e[0] == doctest::Approx(want[0]).epsilon(1e-7));
  CHECK(e[1] == doctest::Approx(want[1]).epsilon(1e-7));

  // excluding the query image itself drops "a" and takes "b" and "c"
  auto ex = expanded_query(index, q, ranked, p, std::string("a"));
  auto want_ex = unit({1.6, 1.8});
  CHECK(ex[0] == doctest::Approx(want_ex[0]).epsilon(1e-7));
  CHECK(ex[1] == doctest::Approx(want_ex[1]).epsilon(1e-7));

  auto qe = query_expand(index, q, ranked, p);
  CHECK(qe.stage == Stage::expanded);
  CHECK(qe.ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK(qe.items[1].score == doctest::Approx(0.6 * want[0] + 0.8 * want[1]).epsilon(1e-7));
}

TEST_CASE("query expansion prefers detected-region descriptors") {
  auto index = toy_index();
  auto q = unit({1.0, 0.0});
  auto ranked = filter_rank(index, q);
  REQUIRE(ranked.items[1].id == "b");
  ranked.items[1].region_descriptor = unit({0.0, 1.0});
  RerankParams p;
  p.qe_top = 2;
  p.shortlist = 3;
  // q + a + region(b), not q + a + stored(b)
  auto e = expanded_query(index, q, ranked, p, std::nullopt);
  auto want = unit({2.0, 1.0});
  CHECK(e[0] == doctest::Approx(want[0]).epsilon(1e-7));
  CHECK(e[1] == doctest::Approx(want[1]).epsilon(1e-7));

  auto qe = query_expand(index, q, ranked, p);
  for (const auto& it : qe.items) {
    if (it.id == "b") CHECK(it.score == doctest::Approx(want[1]).epsilon(1e-7));
    if (it.id == "c") CHECK(it.score == doctest::Approx(want[1]).epsilon(1e-7));
    if (it.id == "a") CHECK(it.score == doctest::Approx(want[0]).epsilon(1e-7));
  }
}

TEST_CASE("query expansion is a fixed point when neighbours equal the query") {
  DescriptorTable t;
  t.dim = 3;
  t.append("x", unit({1, 2, 3}));
  t.append("y", unit({1, 2, 3}));
  t.append("z", unit({3, 2, 1}));
  Index index(t, DescriptorKind::mac, PcaModel::identity(3), {}, none_loader());
  auto q = unit({1, 2, 3});
  auto ranked = filter_rank(index, q);
  RerankParams p;
  p.qe_top = 2;
  auto qe = query_expand(index, q, ranked, p);
  CHECK(qe.ids() == ranked.ids());
  for (std::size_t i = 0; i < 3; ++i) CHECK(qe.items[i].score == doctest::Approx(ranked.items[i].score));
}

TEST_CASE("aml re-ranking with in-memory maps") {
  synth::Rng rng(51);
  synth::SceneParams sp;
  sp.channels = 16;
  auto pair = synth::make_planted_pair(sp, rng, 0);
  std::map<std::string, ActivationMap> maps;
  maps.emplace("hit", pair.target.map);
  for (int i = 0; i < 5; ++i) {
    auto s = synth::make_scene(sp, nullptr, rng, "clutter" + std::to_string(i));
    maps.emplace(s.map.meta().image_id, s.map);
  }
  MapLoader loader = [&maps](const std::string& id) -> std::optional<ActivationMap> {
    auto it = maps.find(id);
    if (it == maps.end()) return std::nullopt;
    return it->second;
  };
  auto pca = PcaModel::identity(16);
  DescriptorTable t;
  t.dim = 16;
  for (const auto& [id, m] : maps) t.append(id, describe(m, DescriptorKind::mac, {}, pca));
  t.append("gone", unit(std::vector<double>(16, 1.0)));
  Index index(t, DescriptorKind::mac, pca, {}, loader);

  auto filtered = filter_rank(index, whitened_mac(pair.query, pca));
  RerankParams p;
  p.shortlist = 7;
  auto a = rerank_aml(index, pair.query, filtered, p, Exec::serial);
  auto b = rerank_aml(index, pair.query, filtered, p, Exec::parallel);
  CHECK(a.stage == Stage::reranked);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].id == b.items[i].id);
    CHECK(a.items[i].score == b.items[i].score);
  }
  CHECK(a.items[0].id == "hit");
  REQUIRE(a.items[0].detection);
  CHECK(iou(a.items[0].detection->region, pair.target.planted) > 0.5);
  for (const auto& item : a.items) {
    if (item.id == "gone") {
      CHECK(item.map_missing);
      CHECK(!item.detection);
    }
  }

  SUBCASE("only the top N are touched") {
    RerankParams one = p;
    one.shortlist = 1;
    auto r = rerank_aml(index, pair.query, filtered, one);
    for (std::size_t i = 1; i < r.items.size(); ++i) {
      CHECK(r.items[i].id == filtered.items[i].id);
      CHECK(r.items[i].score == filtered.items[i].score);
    }
  }
  SUBCASE("run_query composes the stages") {
    QueryTimings timings;
    auto r = run_query(index, pair.query, {true, true}, p, std::nullopt, &timings);
    CHECK(r.stage == Stage::expanded);
    CHECK(timings.reranked == 7);
    CHECK(run_query(index, pair.query, {false, false}, p).ids() == filtered.ids());
  }
}

TEST_CASE("ranked list text round trip") {
  auto index = toy_index();
  auto r = filter_rank(index, unit({0.3, 1.0}));
  r.items[0].detection = DetectionResult{};
  r.items[0].detection->image_box = PixelBox{1, 2, 30, 40};
  std::ostringstream out;
  write_ranked_list(out, r);
  CHECK(out.str().find("1\tc\t") == 0);
  CHECK(out.str().find("\t1,2,30,40\n") != std::string::npos);
  std::istringstream in(out.str());
  auto back = read_ranked_list(in);
  CHECK(back.ids() == r.ids());
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.items[i].score == doctest::Approx(r.items[i].score).epsilon(1e-7));
}
