#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsar/embeddings.hpp"
#include "zsar/rng.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

enum class SplitStrategy { nearest, furthest, random };

std::string to_string(SplitStrategy strategy);
SplitStrategy split_strategy_from_string(const std::string& name);

// How a class's "distance from other classes" is scored. The default is
// the nearest-neighbor (isolation) score; mean distance is available for
// sensitivity checks.
enum class IsolationKind { nearest_neighbor, mean_distance };

// Seen/unseen partition of class indices, both kept sorted ascending.
struct ClassSplit {
  std::vector<int> seen;
  std::vector<int> unseen;
  SplitStrategy strategy = SplitStrategy::random;
  DistanceMetric metric = DistanceMetric::cosine;
  std::optional<std::uint64_t> seed;
  std::optional<double> diversity_floor;

  int class_count() const {
    return static_cast<int>(seen.size() + unseen.size());
  }
  bool is_unseen(int class_index) const;
  bool is_seen(int class_index) const;

  // Throws ConfigError unless seen/unseen are disjoint, cover 0..C-1, and
  // unseen is nonempty.
  void validate() const;
};

// Per-class isolation scores from a symmetric zero-diagonal distance
// matrix.
std::vector<double> isolation_scores(const Tensor& dist, IsolationKind kind);

// Picks the k least isolated classes as unseen, ascending by (score,
// index), skipping any candidate closer than diversity_floor to an
// already-picked unseen class. Throws DataError (reporting how many fit)
// when fewer than k candidates satisfy the floor.
ClassSplit nearest_split(const Tensor& dist, int k,
                         double diversity_floor = 0.0,
                         IsolationKind kind = IsolationKind::nearest_neighbor);

// Picks the k most isolated classes as unseen; ties break toward the
// lower index.
ClassSplit furthest_split(const Tensor& dist, int k,
                          IsolationKind kind = IsolationKind::nearest_neighbor);

// Uniform k-subset of {0..class_count-1} as unseen; deterministic per
// rng seed.
ClassSplit random_split(int class_count, int k, Rng& rng);

// Split file: JSON {strategy, metric, seed, diversity_floor,
// seen:[labels], unseen:[labels]}. Labels are resolved against the given
// class-label order.
void save_split(const std::filesystem::path& path, const ClassSplit& split,
                const std::vector<std::string>& labels);
ClassSplit load_split(const std::filesystem::path& path,
                      const std::vector<std::string>& labels);

}  // namespace zsar
