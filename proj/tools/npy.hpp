#pragma once

#include <filesystem>

#include "rmac/activation_map.hpp"

namespace rmac::tools {

/// Reads a little-endian float32/float64 .npy array of shape (K, H, W) in C
/// order as a dense tensor. Throws FormatError on anything else.
DenseTensor read_npy_tensor(const std::filesystem::path& path);

/// Writes a (K, H, W) float64 .npy file. Used by tests and the synth command.
void write_npy_tensor(const std::filesystem::path& path, const DenseTensor& t);

}  // namespace rmac::tools
