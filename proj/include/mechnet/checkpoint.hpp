// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mechnet/autodiff.hpp"
#include "mechnet/gnn_mdn.hpp"

namespace mechnet {

struct NamedArray {
  std::string name;
  ad::Matrix value;
};

// Flat binary container: the 8-byte magic "MNTENSR1", a u32 array count,
// then per array a u32 name length, the name bytes, u64 rows, u64 cols and
// rows * cols little-endian float64 values in row-major order. Round trips
// are bit-exact.
void write_tensor_container(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_tensor_container(const std::filesystem::path& path);

// Writes `path` (tensor container) and `path` + ".manifest.json" holding
// the architecture (variant tag, widths, component count) and the tensor
// table.
void save_model(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_model(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace mechnet
