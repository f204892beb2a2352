#pragma once

#include <filesystem>
#include <vector>

#include "zsar/tensor.hpp"

namespace zsar {

// Encoder output for a batch of samples: row i is the visual feature of
// sample i, aligned with label_indices[i].
struct VisualFeatureMatrix {
  Tensor features;  // N x F
  std::vector<int> label_indices;
  bool unit_normalized = false;

  int count() const { return features.empty() ? 0 : features.dim(0); }
  int dim() const { return features.empty() ? 0 : features.dim(1); }

  void validate() const;
};

// Feature file: magic "ZFTR", version u32, JSON header {count, dim,
// normalized, label_indices}, then the rows as little-endian 32-bit
// floats.
void save_features(const std::filesystem::path& path,
                   const VisualFeatureMatrix& features);
VisualFeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace zsar
