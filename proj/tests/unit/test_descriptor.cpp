#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "rmac/descriptor.hpp"
#include "rmac/errors.hpp"
#include "rmac/pooling.hpp"
#include "rmac/region_grid.hpp"
#include "rmac/synthetic.hpp"

using namespace rmac;

namespace {

std::vector<DescriptorVec> gaussian_samples(int n, int k, std::uint64_t seed) {
  synth::Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<DescriptorVec> out;
  for (int i = 0; i < n; ++i) {
    DescriptorVec v(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) v[std::size_t(c)] = 3.0 + g(rng);
    out.push_back(v);
  }
  return out;
}

PcaModel trained_model(int k, std::uint64_t seed) {
  synth::Rng rng(seed);
  std::vector<DescriptorVec> samples;
  for (int i = 0; i < 40; ++i) samples.push_back(mac(synth::random_map(9, 7, k, 0.6, rng)));
  for (auto& s : samples) s = l2_normalize(s);
  return learn_pca(samples);
}

}  // namespace

TEST_CASE("l2 normalization") {
  DescriptorVec v(std::vector<double>{3.0, 4.0}, Norm::raw);
  auto u = l2_normalize(v);
  CHECK(u[0] == doctest::Approx(0.6));
  CHECK(u[1] == doctest::Approx(0.8));
  CHECK(u.norm == Norm::unit);
  CHECK_THROWS_AS(l2_normalize(DescriptorVec(3)), ZeroVectorError);
}

TEST_CASE("identity model leaves unit vectors unchanged") {
  auto id = PcaModel::identity(3);
  DescriptorVec v(std::vector<double>{0.0, 0.6, 0.8}, Norm::unit);
  CHECK(whiten(v, id).values == v.values);
  CHECK(postprocess(v, id).values == v.values);
  CHECK_THROWS_AS(whiten(DescriptorVec(4), id), DimensionMismatch);
}

TEST_CASE("learned PCA of isotropic data is close to scaled identity") {
  const int k = 4;
  auto samples = gaussian_samples(10000, k, 21);
  auto model = learn_pca(samples);
  for (int c = 0; c < k; ++c) CHECK(model.mean[std::size_t(c)] == doctest::Approx(3.0).epsilon(0.02));
  // whitened samples have unit covariance
  std::vector<double> cov(k * k, 0.0);
  for (const auto& s : samples) {
    auto w = whiten(s, model);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) cov[i * k + j] += w[i] * w[j];
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double c = cov[i * k + j] / (samples.size() - 1);
      CHECK(c == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
  // each projection row has norm near 1 (eigenvalues near 1)
  for (int r = 0; r < k; ++r) {
    double n = 0;
    for (int c = 0; c < k; ++c) n += model.at(r, c) * model.at(r, c);
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("whitening the mean gives zero") {
  auto model = learn_pca(gaussian_samples(50, 5, 22));
  DescriptorVec m(model.mean, Norm::raw);
  for (double v : whiten(m, model).values) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("pca rejects degenerate corpora") {
  auto one = gaussian_samples(1, 3, 1);
  CHECK_THROWS_AS(learn_pca(one), InsufficientData);
  std::vector<DescriptorVec> same(5, DescriptorVec(std::vector<double>{1, 2, 3}, Norm::raw));
  CHECK_THROWS_AS(learn_pca(same), InsufficientData);
  auto samples = gaussian_samples(10, 3, 2);
  samples.push_back(DescriptorVec(4));
  CHECK_THROWS_AS(learn_pca(samples), DimensionMismatch);
}

TEST_CASE("a zero-variance dimension stays finite") {
  auto samples = gaussian_samples(200, 3, 23);
  for (auto& s : samples) s[2] = 1.5;
  auto model = learn_pca(samples);
  for (double v : model.projection) CHECK(std::isfinite(v));
  auto w = whiten(samples[0], model);
  for (double v : w.values) CHECK(std::isfinite(v));
}

TEST_CASE("output_dim keeps leading components only") {
  auto samples = gaussian_samples(100, 4, 24);
  auto full = learn_pca(samples);
  auto cut = learn_pca(samples, 2);
  for (int c = 0; c < 4; ++c) {
    CHECK(cut.at(0, c) == full.at(0, c));
    CHECK(cut.at(1, c) == full.at(1, c));
    CHECK(cut.at(2, c) == 0.0);
    CHECK(cut.at(3, c) == 0.0);
  }
}

TEST_CASE("whitened mac is unit norm and matches the longhand pipeline") {
  auto model = trained_model(6, 25);
  synth::Rng rng(26);
  auto m = synth::random_map(10, 8, 6, 0.5, rng);
  auto d = whitened_mac(m, model);
  CHECK(l2_norm(d.span()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d == l2_normalize(whiten(l2_normalize(mac(m)), model)));
}

TEST_CASE("R-MAC contract") {
  auto model = trained_model(8, 27);
  synth::Rng rng(28);
  auto sq = synth::random_map(12, 12, 8, 0.6, rng);

  SUBCASE("dimension and norm") {
    auto d = rmac::rmac(sq, {}, model);
    CHECK(d.size() == 8);
    CHECK(l2_norm(d.span()) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("one scale on a square map equals whitened mac") {
    RegionGridParams one;
    one.num_scales = 1;
    auto a = rmac::rmac(sq, one, model);
    auto b = whitened_mac(sq, model);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
  }
  SUBCASE("region order does not matter") {
    auto regions = region_grid(12, 12);
    auto base = rmac_from_regions(sq, regions, model);
    std::mt19937 shuffle_rng(5);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(regions.begin(), regions.end(), shuffle_rng);
      REQUIRE(rmac_from_regions(sq, regions, model) == base);
    }
  }
  SUBCASE("scale subsets give different descriptors") {
    RegionGridParams s1, s3;
    s1.only_scales = {1};
    s3.only_scales = {3};
    CHECK(rmac::rmac(sq, s1, model) != rmac::rmac(sq, s3, model));
    CHECK(rmac::rmac(sq, s3, model) != rmac::rmac(sq, {}, model));
  }
  SUBCASE("all-zero map has no descriptor") {
    ActivationMap z(12, 12, 8, ImageMeta{});
    CHECK_THROWS_AS(rmac::rmac(z, {}, model), ZeroVectorError);
  }
}

TEST_CASE("approximate descriptors track the exact ones") {
  auto model = trained_model(8, 29);
  synth::Rng rng(30);
  auto m = synth::random_map(14, 10, 8, 0.7, rng);
  auto stack = IntegralStack::build(m);
  Region full = Region::full(14, 10);
  auto id = PcaModel::identity(8);
  auto approx = approx_whitened_mac(stack, full, id);
  CHECK(cosine(approx.span(), whitened_mac(m, id).span()) > 0.95);

  Region window{2, 1, 11, 8};
  auto ar = approx_rmac(stack, window, {}, id);
  auto er = rmac::rmac(m.crop(window), {}, id);
  CHECK(cosine(ar.span(), er.span()) > 0.95);

  // single-cell window is exact
  Region cell{3, 3, 3, 3};
  auto exact = l2_normalize(whiten(l2_normalize(regional_max(m, cell)), model));
  if (l2_norm(regional_max(m, cell).span()) > 0) {
    auto a = approx_whitened_mac(stack, cell, model);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(exact[i]).epsilon(1e-12));
  }
}

TEST_CASE("pca file round trip and corruption") {
  auto model = trained_model(5, 31);
  auto bytes = encode_pca(model);
  CHECK(bytes.size() == 4 + 2 + 8 * 5 + 8 * 25);
  CHECK(decode_pca(bytes) == model);
  auto bad = bytes;
  bad[0] = 'Q';
  CHECK_THROWS_AS(decode_pca(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_pca(bad), FormatError);

  auto path = std::filesystem::temp_directory_path() / "rmac_test.pca";
  write_pca(path, model);
  CHECK(read_pca(path) == model);
  std::filesystem::remove(path);
}

TEST_CASE("descriptor table round trip") {
  DescriptorTable t;
  t.dim = 3;
  t.append("a", l2_normalize(DescriptorVec(std::vector<double>{1, 2, 2}, Norm::raw)));
  t.append("bb", l2_normalize(DescriptorVec(std::vector<double>{0, 0, 1}, Norm::raw)));
  CHECK_THROWS_AS(t.append("c", DescriptorVec(2)), DimensionMismatch);
  auto bytes = encode_descriptors(t);
  CHECK(decode_descriptors(bytes) == t);
  CHECK(t.descriptor(0)[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  bytes.push_back(1);
  CHECK_THROWS_AS(decode_descriptors(bytes), FormatError);
}

TEST_CASE("regional training vectors are unit and skip empty regions") {
  synth::Rng rng(32);
  auto m = synth::random_map(12, 12, 4, 0.95, rng);
  auto vs = regional_training_vectors(m, {});
  CHECK(vs.size() <= 14);
  for (const auto& v : vs) CHECK(l2_norm(v.span()) == doctest::Approx(1.0));
}
