#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rmac/activation_map.hpp"

namespace rmac {

// .actmap layout (little-endian):
//
//   "AMP1"  u16 version=1  u16 W  u16 H  u16 K  u32 W_I  u32 H_I
//   u16 id_len  id_len bytes of UTF-8 image id
//   K channel blocks, ascending channel index:
//     u32 nnz, then payload bytes
//
// Payload scans the channel row-major (p = y*W + x). Each element byte is
// (delta << 3) | level with delta in 0..30 and level in 1..7, where delta is
// the count of zero positions skipped since the previous element (or since
// p = 0). A gap of 31 or more zeros is written as repeated escape bytes 0xF8
// (delta 31, level 0), each skipping 31 positions, placed immediately before
// the element they precede. Escapes are not counted in nnz and never trail
// the last element of a channel.

inline constexpr std::uint16_t kActmapVersion = 1;
inline constexpr std::uint8_t kEscapeByte = 0xF8;
inline constexpr int kMaxDelta = 30;

std::vector<std::uint8_t> encode(const ActivationMap& map);

/// Throws FormatError (carrying the byte offset) on bad magic, unknown
/// version, truncation, invalid payload bytes or trailing data.
ActivationMap decode(std::span<const std::uint8_t> bytes);

struct ActmapStats {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::uint64_t nonzeros = 0;      // element bytes
  std::uint64_t escape_bytes = 0;  // zero-run escapes
  std::uint64_t header_bytes = 0;  // fixed header + per-channel counts
  std::uint64_t total_bytes = 0;

  double sparsity() const noexcept {
    const double cells = double(width) * height * channels;
    return cells > 0 ? 1.0 - double(nonzeros) / cells : 0.0;
  }
};

/// Full validation of an encoded stream plus a byte accounting breakdown.
ActmapStats inspect(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ActivationMap read_actmap(const std::filesystem::path& path);
void write_actmap(const std::filesystem::path& path, const ActivationMap& map);

}  // namespace rmac
