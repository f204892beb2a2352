#include "zsar/splits.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

namespace {

void validate_distance_matrix(const Tensor& dist) {
  if (dist.rank() != 2 || dist.dim(0) != dist.dim(1)) {
    throw ShapeError("split: distance matrix must be square, got " +
                     dims_to_string(dist.dims()));
  }
  const int n = dist.dim(0);
  if (n < 2) {
    throw ConfigError("split: need at least 2 classes");
  }
  for (int i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) {
      throw DataError("split: distance matrix diagonal must be zero");
    }
    for (int j = i + 1; j < n; ++j) {
      if (dist(i, j) != dist(j, i)) {
        throw DataError("split: distance matrix must be symmetric");
      }
    }
  }
}

void validate_k(int k, int class_count) {
  if (k <= 0 || k >= class_count) {
    throw ConfigError("split: unseen count k must satisfy 0 < k < " +
                      std::to_string(class_count) + ", got " +
                      std::to_string(k));
  }
}

ClassSplit finish_split(std::vector<int> unseen, int class_count,
                        SplitStrategy strategy) {
  std::sort(unseen.begin(), unseen.end());
  ClassSplit split;
  split.strategy = strategy;
  split.unseen = std::move(unseen);
  for (int c = 0; c < class_count; ++c) {
    if (!std::binary_search(split.unseen.begin(), split.unseen.end(), c)) {
      split.seen.push_back(c);
    }
  }
  split.validate();
  return split;
}

}  // namespace

std::string to_string(SplitStrategy strategy) {
  switch (strategy) {
    case SplitStrategy::nearest: return "nearest";
    case SplitStrategy::furthest: return "furthest";
    case SplitStrategy::random: return "random";
  }
  return "random";
}

SplitStrategy split_strategy_from_string(const std::string& name) {
  if (name == "nearest") return SplitStrategy::nearest;
  if (name == "furthest") return SplitStrategy::furthest;
  if (name == "random") return SplitStrategy::random;
  throw ConfigError("unknown split strategy '" + name + "'");
}

bool ClassSplit::is_unseen(int class_index) const {
  return std::binary_search(unseen.begin(), unseen.end(), class_index);
}

bool ClassSplit::is_seen(int class_index) const {
  return std::binary_search(seen.begin(), seen.end(), class_index);
}

void ClassSplit::validate() const {
  if (unseen.empty()) {
    throw ConfigError("split: unseen set must be nonempty");
  }
  std::set<int> all(seen.begin(), seen.end());
  for (int c : unseen) {
    if (!all.insert(c).second) {
      throw ConfigError("split: class " + std::to_string(c) +
                        " is both seen and unseen");
    }
  }
  const int count = class_count();
  for (int c = 0; c < count; ++c) {
    if (!all.count(c)) {
      throw ConfigError("split: class " + std::to_string(c) +
                        " missing from the partition");
    }
  }
}

std::vector<double> isolation_scores(const Tensor& dist, IsolationKind kind) {
  validate_distance_matrix(dist);
  const int n = dist.dim(0);
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double nearest = 0.0;
    double sum = 0.0;
    bool first = true;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sum += dist(i, j);
      if (first || dist(i, j) < nearest) {
        nearest = dist(i, j);
        first = false;
      }
    }
    scores[static_cast<std::size_t>(i)] =
        kind == IsolationKind::nearest_neighbor ? nearest
                                                : sum / (n - 1);
  }
  return scores;
}

ClassSplit nearest_split(const Tensor& dist, int k, double diversity_floor,
                         IsolationKind kind) {
  const auto scores = isolation_scores(dist, kind);
  const int n = dist.dim(0);
  validate_k(k, n);
  if (diversity_floor < 0) {
    throw ConfigError("split: diversity_floor must be >= 0");
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa < sb : a < b;
  });

  std::vector<int> picked;
  for (int candidate : order) {
    if (static_cast<int>(picked.size()) == k) break;
    bool diverse = true;
    for (int chosen : picked) {
      if (dist(candidate, chosen) < diversity_floor) {
        diverse = false;
        break;
      }
    }
    if (diverse) picked.push_back(candidate);
  }
  if (static_cast<int>(picked.size()) < k) {
    throw DataError("nearest split infeasible: only " +
                    std::to_string(picked.size()) + " of " +
                    std::to_string(k) +
                    " classes satisfy diversity_floor " +
                    std::to_string(diversity_floor));
  }
  ClassSplit split = finish_split(std::move(picked), n, SplitStrategy::nearest);
  split.diversity_floor = diversity_floor;
  return split;
}

ClassSplit furthest_split(const Tensor& dist, int k, IsolationKind kind) {
  const auto scores = isolation_scores(dist, kind);
  const int n = dist.dim(0);
  validate_k(k, n);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return finish_split(std::move(order), n, SplitStrategy::furthest);
}

ClassSplit random_split(int class_count, int k, Rng& rng) {
  validate_k(k, class_count);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  std::vector<int> pool(static_cast<std::size_t>(class_count));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::uint64_t>(class_count - i)));
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(i) + j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  ClassSplit split =
      finish_split(std::move(pool), class_count, SplitStrategy::random);
  split.seed = rng.seed();
  return split;
}

void save_split(const std::filesystem::path& path, const ClassSplit& split,
                const std::vector<std::string>& labels) {
  split.validate();
  if (static_cast<int>(labels.size()) != split.class_count()) {
    throw ConfigError("save_split: " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(split.class_count()) +
                      " classes");
  }
  nlohmann::json doc;
  doc["strategy"] = to_string(split.strategy);
  doc["metric"] = to_string(split.metric);
  if (split.seed) doc["seed"] = *split.seed;
  if (split.diversity_floor) doc["diversity_floor"] = *split.diversity_floor;
  auto to_labels = [&labels](const std::vector<int>& indices) {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (int c : indices) out.push_back(labels[static_cast<std::size_t>(c)]);
    return out;
  };
  doc["seen"] = to_labels(split.seen);
  doc["unseen"] = to_labels(split.unseen);
  io::write_text_file(path, doc.dump(2) + "\n");
}

ClassSplit load_split(const std::filesystem::path& path,
                      const std::vector<std::string>& labels) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("split file " + path.string() + ": " + e.what());
  }
  auto to_indices = [&labels, &path](const nlohmann::json& list) {
    std::vector<int> out;
    for (const auto& item : list) {
      const std::string label = item.get<std::string>();
      const auto it = std::find(labels.begin(), labels.end(), label);
      if (it == labels.end()) {
        throw DataError("split file " + path.string() +
                        ": unknown class label '" + label + "'");
      }
      out.push_back(static_cast<int>(it - labels.begin()));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  ClassSplit split;
  try {
    split.strategy =
        split_strategy_from_string(doc.at("strategy").get<std::string>());
    split.metric =
        distance_metric_from_string(doc.at("metric").get<std::string>());
    split.seen = to_indices(doc.at("seen"));
    split.unseen = to_indices(doc.at("unseen"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("split file " + path.string() + ": " + e.what());
  }
  if (doc.contains("seed")) {
    split.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("diversity_floor")) {
    split.diversity_floor = doc.at("diversity_floor").get<double>();
  }
  if (split.class_count() != static_cast<int>(labels.size())) {
    throw DataError("split file " + path.string() + ": covers " +
                    std::to_string(split.class_count()) + " of " +
                    std::to_string(labels.size()) + " classes");
  }
  split.validate();
  return split;
}

}  // namespace zsar
