#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rmac/activation_map.hpp"
#include "rmac/descriptor_vec.hpp"
#include "rmac/pooling.hpp"
#include "rmac/region_grid.hpp"

namespace rmac {

/// v / |v|. Throws ZeroVectorError for the zero vector.
DescriptorVec l2_normalize(const DescriptorVec& v);

/// Mean and whitening projection P = diag(lambda)^-1/2 E^T, rows ordered by
/// descending eigenvalue. Applying it computes P (v - mean).
struct PcaModel {
  int dim = 0;                     // K
  std::vector<double> mean;        // K
  std::vector<double> projection;  // K x K, row-major
  std::string source;              // corpus tag, informational only

  static PcaModel identity(int k);

  double at(int row, int col) const { return projection[std::size_t(row) * dim + col]; }
  friend bool operator==(const PcaModel& a, const PcaModel& b) {
    return a.dim == b.dim && a.mean == b.mean && a.projection == b.projection;
  }
};

/// Relative floor applied to eigenvalues before the inverse square root.
inline constexpr double kEigenFloor = 1e-10;

/// Learns mean-centred PCA-whitening from `samples` (sample covariance,
/// N-1 denominator). `output_dim` in (0, K) zeroes the projection rows past
/// that many components; 0 keeps all K. Throws InsufficientData for fewer
/// than two samples or a corpus with zero variance.
PcaModel learn_pca(std::span<const DescriptorVec> samples, int output_dim = 0,
                   std::string source = {});

/// P (v - mean). Throws DimensionMismatch.
DescriptorVec whiten(const DescriptorVec& v, const PcaModel& model);

/// l2 -> whiten -> l2 applied to one raw pooled vector.
DescriptorVec postprocess(const DescriptorVec& raw, const PcaModel& model);

/// mac -> l2 -> whiten -> l2.
DescriptorVec whitened_mac(const ActivationMap& map, const PcaModel& model);

/// Sums the post-processed regional vectors and l2-normalizes the total.
/// Zero regional vectors contribute nothing. The sum is taken per component
/// over sorted values, so the result does not depend on region order.
/// Throws ZeroVectorError when no region is usable.
DescriptorVec aggregate_regions(std::span<const DescriptorVec> raw_regional, const PcaModel& model);

/// R-MAC with exact regional max over the grid for this map.
DescriptorVec rmac(const ActivationMap& map, const RegionGridParams& grid, const PcaModel& model);

/// R-MAC over an explicit region list.
DescriptorVec rmac_from_regions(const ActivationMap& map, std::span<const Region> regions,
                                const PcaModel& model);

/// Whitened MAC of a rectangle using integral approximate pooling.
DescriptorVec approx_whitened_mac(const IntegralStack& stack, const Region& window,
                                  const PcaModel& model);

/// R-MAC restricted to `window`: the grid is laid out on the window's own
/// dimensions, offset into it, and pooled through the integral stack.
DescriptorVec approx_rmac(const IntegralStack& stack, const Region& window,
                          const RegionGridParams& grid, const PcaModel& model);

/// l2-normalized exact regional maxima over the grid (zero regions dropped),
/// the training vectors for an R-MAC whitening model.
std::vector<DescriptorVec> regional_training_vectors(const ActivationMap& map,
                                                     const RegionGridParams& grid);

// PCA file: "PCA1", u16 K, K f64 mean, K*K f64 projection (row-major).
std::vector<std::uint8_t> encode_pca(const PcaModel& model);
PcaModel decode_pca(std::span<const std::uint8_t> bytes);
void write_pca(const std::filesystem::path& path, const PcaModel& model);
PcaModel read_pca(const std::filesystem::path& path);

/// Unit descriptors of a database, stored as float32 rows.
struct DescriptorTable {
  int dim = 0;
  std::vector<std::string> ids;
  std::vector<float> data;  // ids.size() x dim

  std::size_t size() const noexcept { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, std::size_t(dim)}; }
  void append(const std::string& id, const DescriptorVec& v);
  DescriptorVec descriptor(std::size_t i) const;

  friend bool operator==(const DescriptorTable&, const DescriptorTable&) = default;
};

// Descriptor file: "DSC1", u16 K, u32 count, per entry u16 id length + UTF-8
// id + K f32.
std::vector<std::uint8_t> encode_descriptors(const DescriptorTable& table);
DescriptorTable decode_descriptors(std::span<const std::uint8_t> bytes);
void write_descriptors(const std::filesystem::path& path, const DescriptorTable& table);
DescriptorTable read_descriptors(const std::filesystem::path& path);

}  // namespace rmac
