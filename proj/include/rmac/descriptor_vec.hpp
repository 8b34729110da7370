#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rmac {

enum class Norm { raw, unit };

/// K-dimensional image or region signature.
struct DescriptorVec {
  std::vector<double> values;
  Norm norm = Norm::raw;

  DescriptorVec() = default;
  explicit DescriptorVec(std::size_t k, Norm n = Norm::raw) : values(k, 0.0), norm(n) {}
  DescriptorVec(std::vector<double> v, Norm n) : values(std::move(v)), norm(n) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> span() const noexcept { return values; }

  friend bool operator==(const DescriptorVec&, const DescriptorVec&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace rmac
