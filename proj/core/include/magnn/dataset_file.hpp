#pragma once

#include <string>

#include "magnn/dataset.hpp"

namespace magnn {

inline constexpr char kDatasetMagic[9] = "MAGNNDS1";

// Versioned binary container (magic MAGNNDS1, little-endian) holding the
// id maps and the per-user train/val/test index lists.
void save_dataset(const SplitDataset& split, const std::string& path);
SplitDataset load_dataset(const std::string& path);

// Human-readable stats summary (M, N, interactions, density) as JSON.
std::string stats_json(const DatasetStats& stats);

}  // namespace magnn
