#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsar/rng.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

enum class EmbeddingSource { loaded, random };

// The external language knowledge base: one embedding row per action
// class label, in a fixed order shared with everything that indexes
// classes.
struct LabelEmbeddingTable {
  std::vector<std::string> labels;
  Tensor embeddings;  // C x D
  EmbeddingSource source = EmbeddingSource::loaded;
  std::uint64_t random_seed = 0;  // meaningful only for source == random
  bool normalized = false;

  int class_count() const { return embeddings.empty() ? 0 : embeddings.dim(0); }
  int dim() const { return embeddings.empty() ? 0 : embeddings.dim(1); }

  // Index of a label, or -1.
  int index_of(const std::string& label) const;
};

// Embedding CSV: header `label,d0,...,d{D-1}`, one row per class, labels
// quoted per RFC 4180 when they contain commas or quotes. Values are
// quantized to 32-bit floats on load, so load -> save -> load is
// value-identical.
//
// When expected_labels is given the file must contain exactly that label
// set and rows are reordered to match. Each malformed input (duplicate
// label, ragged row, non-numeric cell, missing expected label) raises a
// distinct ParseError naming the line.
LabelEmbeddingTable load_embeddings(
    const std::filesystem::path& path,
    const std::optional<std::vector<std::string>>& expected_labels = {});

void save_embeddings(const std::filesystem::path& path,
                     const LabelEmbeddingTable& table);

// Random-embedding ablation: rows drawn i.i.d. standard normal, then
// unit-normalized. Deterministic per rng seed.
LabelEmbeddingTable random_embeddings(const std::vector<std::string>& labels,
                                      int dim, Rng& rng);

// Copy with every row unit-normalized and the flag set.
LabelEmbeddingTable normalize_table(const LabelEmbeddingTable& table);

enum class DistanceMetric { cosine, euclidean };

std::string to_string(DistanceMetric metric);
DistanceMetric distance_metric_from_string(const std::string& name);

// C x C symmetric distance matrix with an exactly-zero diagonal.
// Cosine distance is 1 - cosine similarity and rejects zero-norm rows.
Tensor pairwise_distances(const LabelEmbeddingTable& table,
                          DistanceMetric metric);

}  // namespace zsar
