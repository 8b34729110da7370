#include "rmac/descriptor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rmac/actmap_codec.hpp"
#include "rmac/byte_io.hpp"
#include "rmac/errors.hpp"

namespace rmac {

using detail::ByteReader;
using detail::ByteWriter;

DescriptorVec l2_normalize(const DescriptorVec& v) {
  const double n = l2_norm(v.values);
  if (n == 0.0) throw ZeroVectorError("cannot l2-normalize a zero vector");
  DescriptorVec out(v.values, Norm::unit);
  for (double& x : out.values) x /= n;
  return out;
}

PcaModel PcaModel::identity(int k) {
  PcaModel m;
  m.dim = k;
  m.mean.assign(std::size_t(k), 0.0);
  m.projection.assign(std::size_t(k) * k, 0.0);
  for (int i = 0; i < k; ++i) m.projection[std::size_t(i) * k + i] = 1.0;
  m.source = "identity";
  return m;
}

PcaModel learn_pca(std::span<const DescriptorVec> samples, int output_dim, std::string source) {
  if (samples.size() < 2) throw InsufficientData("PCA needs at least two samples");
  const auto k = Eigen::Index(samples.front().size());
  if (k == 0) throw InsufficientData("PCA samples are empty");
  const auto n = Eigen::Index(samples.size());

  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (Eigen::Index(samples[std::size_t(i)].size()) != k) {
      throw DimensionMismatch("PCA samples have inconsistent dimensions");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(samples[std::size_t(i)].values.data(), k);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / double(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw InsufficientData("PCA eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double top = values(0);
  if (!(top > 0.0)) throw InsufficientData("PCA training data has zero variance");
  const double floor = kEigenFloor * top;

  PcaModel m;
  m.dim = int(k);
  m.source = std::move(source);
  m.mean.assign(mean.data(), mean.data() + k);
  m.projection.assign(std::size_t(k * k), 0.0);
  const Eigen::Index keep = (output_dim > 0 && output_dim < k) ? output_dim : k;
  for (Eigen::Index r = 0; r < keep; ++r) {
    Eigen::VectorXd e = vectors.col(r);
    // Fix the sign so the largest-magnitude component is positive.
    Eigen::Index arg = 0;
    e.cwiseAbs().maxCoeff(&arg);
    if (e(arg) < 0) e = -e;
    const double scale = 1.0 / std::sqrt(std::max(values(r), floor));
    for (Eigen::Index c = 0; c < k; ++c) m.projection[std::size_t(r * k + c)] = scale * e(c);
  }
  return m;
}

DescriptorVec whiten(const DescriptorVec& v, const PcaModel& model) {
  if (int(v.size()) != model.dim) {
    throw DimensionMismatch("descriptor has " + std::to_string(v.size()) +
                            " dimensions, PCA model expects " + std::to_string(model.dim));
  }
  const int k = model.dim;
  std::vector<double> centred(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) centred[std::size_t(i)] = v[std::size_t(i)] - model.mean[std::size_t(i)];
  DescriptorVec out(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    out[std::size_t(r)] = dot({model.projection.data() + std::size_t(r) * k, std::size_t(k)}, centred);
  }
  return out;
}

DescriptorVec postprocess(const DescriptorVec& raw, const PcaModel& model) {
  return l2_normalize(whiten(l2_normalize(raw), model));
}

DescriptorVec whitened_mac(const ActivationMap& map, const PcaModel& model) {
  return postprocess(mac(map), model);
}

DescriptorVec aggregate_regions(std::span<const DescriptorVec> raw_regional, const PcaModel& model) {
  std::vector<DescriptorVec> parts;
  parts.reserve(raw_regional.size());
  for (const auto& r : raw_regional) {
    if (l2_norm(r.values) == 0.0) continue;
    auto w = whiten(l2_normalize(r), model);
    if (l2_norm(w.values) == 0.0) continue;
    parts.push_back(l2_normalize(w));
  }
  if (parts.empty()) throw ZeroVectorError("every region pooled to a zero vector");

  const std::size_t k = parts.front().size();
  DescriptorVec sum(k);
  std::vector<double> column(parts.size());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t p = 0; p < parts.size(); ++p) column[p] = parts[p][i];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) s += v;
    sum[i] = s;
  }
  return l2_normalize(sum);
}

DescriptorVec rmac_from_regions(const ActivationMap& map, std::span<const Region> regions,
                                const PcaModel& model) {
  std::vector<DescriptorVec> raw;
  raw.reserve(regions.size());
  for (const auto& r : regions) raw.push_back(regional_max(map, r, Exec::serial));
  return aggregate_regions(raw, model);
}

DescriptorVec rmac(const ActivationMap& map, const RegionGridParams& grid, const PcaModel& model) {
  const auto regions = region_grid(map.width(), map.height(), grid);
  return rmac_from_regions(map, regions, model);
}

DescriptorVec approx_whitened_mac(const IntegralStack& stack, const Region& window,
                                  const PcaModel& model) {
  return postprocess(approx_regional_vector(stack, window), model);
}

DescriptorVec approx_rmac(const IntegralStack& stack, const Region& window,
                          const RegionGridParams& grid, const PcaModel& model) {
  check_region(window, stack.width(), stack.height());
  const auto local = region_grid(window.width(), window.height(), grid);
  std::vector<DescriptorVec> raw;
  raw.reserve(local.size());
  for (const auto& r : local) {
    const Region shifted{r.x0 + window.x0, r.y0 + window.y0, r.x1 + window.x0, r.y1 + window.y0};
    raw.push_back(approx_regional_vector(stack, shifted));
  }
  return aggregate_regions(raw, model);
}

std::vector<DescriptorVec> regional_training_vectors(const ActivationMap& map,
                                                     const RegionGridParams& grid) {
  std::vector<DescriptorVec> out;
  for (const auto& r : region_grid(map.width(), map.height(), grid)) {
    auto v = regional_max(map, r, Exec::serial);
    if (l2_norm(v.values) == 0.0) continue;
    out.push_back(l2_normalize(v));
  }
  return out;
}

namespace {

constexpr char kPcaMagic[4] = {'P', 'C', 'A', '1'};
constexpr char kDscMagic[4] = {'D', 'S', 'C', '1'};

void expect_magic(ByteReader& in, const char (&magic)[4]) {
  if (in.get_string(4, "magic") != std::string_view(magic, 4)) {
    throw FormatError(std::string("bad magic, expected ") + std::string(magic, 4), 0);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_pca(const PcaModel& model) {
  if (model.dim <= 0 || model.dim > std::numeric_limits<std::uint16_t>::max()) {
    throw EncodingError("PCA dimension does not fit the 16-bit header field");
  }
  ByteWriter out;
  out.put_bytes(std::string_view(kPcaMagic, 4));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(model.dim));
  for (double v : model.mean) out.put<double>(v);
  for (double v : model.projection) out.put<double>(v);
  return std::move(out.bytes());
}

PcaModel decode_pca(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, kPcaMagic);
  PcaModel m;
  m.dim = in.get<std::uint16_t>("dimension");
  if (m.dim == 0) in.fail("zero PCA dimension");
  m.mean.resize(std::size_t(m.dim));
  for (auto& v : m.mean) v = in.get<double>("mean");
  m.projection.resize(std::size_t(m.dim) * m.dim);
  for (auto& v : m.projection) v = in.get<double>("projection");
  if (!in.at_end()) in.fail("trailing bytes after PCA model");
  return m;
}

void write_pca(const std::filesystem::path& path, const PcaModel& model) {
  write_file_bytes(path, encode_pca(model));
}

PcaModel read_pca(const std::filesystem::path& path) {
  auto m = decode_pca(read_file_bytes(path));
  m.source = path.string();
  return m;
}

void DescriptorTable::append(const std::string& id, const DescriptorVec& v) {
  if (dim == 0 && ids.empty()) dim = int(v.size());
  if (int(v.size()) != dim) throw DimensionMismatch("descriptor dimension differs from table");
  ids.push_back(id);
  for (double x : v.values) data.push_back(static_cast<float>(x));
}

DescriptorVec DescriptorTable::descriptor(std::size_t i) const {
  auto r = row(i);
  return DescriptorVec(std::vector<double>(r.begin(), r.end()), Norm::unit);
}

std::vector<std::uint8_t> encode_descriptors(const DescriptorTable& table) {
  if (table.dim < 0 || table.dim > std::numeric_limits<std::uint16_t>::max()) {
    throw EncodingError("descriptor dimension does not fit the 16-bit header field");
  }
  ByteWriter out;
  out.put_bytes(std::string_view(kDscMagic, 4));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(table.dim));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.ids[i].size() > std::numeric_limits<std::uint16_t>::max()) {
      throw EncodingError("image id longer than 65535 bytes");
    }
    out.put<std::uint16_t>(static_cast<std::uint16_t>(table.ids[i].size()));
    out.put_bytes(table.ids[i]);
    for (float v : table.row(i)) out.put<float>(v);
  }
  return std::move(out.bytes());
}

DescriptorTable decode_descriptors(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, kDscMagic);
  DescriptorTable t;
  t.dim = in.get<std::uint16_t>("dimension");
  const auto count = in.get<std::uint32_t>("entry count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint16_t>("id length");
    t.ids.push_back(in.get_string(len, "id"));
    for (int c = 0; c < t.dim; ++c) t.data.push_back(in.get<float>("descriptor"));
  }
  if (!in.at_end()) in.fail("trailing bytes after descriptor table");
  return t;
}

void write_descriptors(const std::filesystem::path& path, const DescriptorTable& table) {
  write_file_bytes(path, encode_descriptors(table));
}

DescriptorTable read_descriptors(const std::filesystem::path& path) {
  return decode_descriptors(read_file_bytes(path));
}

}  // namespace rmac
