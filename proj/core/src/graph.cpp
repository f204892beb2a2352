#include "zsar/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

void JointTopology::validate() const {
  if (joint_count <= 0) {
    throw ConfigError("topology: joint_count must be positive");
  }
  if (!names.empty() && static_cast<int>(names.size()) != joint_count) {
    throw ConfigError("topology: names must be empty or one per joint");
  }
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= joint_count || b < 0 || b >= joint_count) {
      throw ConfigError("topology: edge (" + std::to_string(a) + ", " +
                        std::to_string(b) + ") out of range for " +
                        std::to_string(joint_count) + " joints");
    }
    if (a == b) {
      throw ConfigError("topology: self-loop at joint " + std::to_string(a));
    }
  }
  // Connectivity by BFS from joint 0.
  std::vector<std::vector<int>> neighbors(joint_count);
  for (const auto& [a, b] : edges) {
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }
  std::vector<bool> visited(joint_count, false);
  std::vector<int> queue = {0};
  visited[0] = true;
  int reached = 1;
  while (!queue.empty()) {
    const int node = queue.back();
    queue.pop_back();
    for (int next : neighbors[node]) {
      if (!visited[next]) {
        visited[next] = true;
        ++reached;
        queue.push_back(next);
      }
    }
  }
  if (reached != joint_count) {
    throw ConfigError("topology: graph is not connected (" +
                      std::to_string(reached) + " of " +
                      std::to_string(joint_count) + " joints reachable)");
  }
}

JointTopology make_topology(int joint_count,
                            std::vector<std::pair<int, int>> edges,
                            std::vector<std::string> names) {
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  JointTopology topology{joint_count, std::move(edges), std::move(names)};
  topology.validate();
  return topology;
}

JointTopology ntu25_topology() {
  // Bones of the standard 25-joint Kinect-v2 skeleton, zero-based.
  std::vector<std::pair<int, int>> bones = {
      {0, 1},   {1, 20},  {2, 20},  {2, 3},   {4, 20},  {4, 5},
      {5, 6},   {6, 7},   {8, 20},  {8, 9},   {9, 10},  {10, 11},
      {0, 12},  {12, 13}, {13, 14}, {14, 15}, {0, 16},  {16, 17},
      {17, 18}, {18, 19}, {21, 22}, {7, 22},  {23, 24}, {11, 24},
  };
  std::vector<std::string> names = {
      "spine_base",    "spine_mid",      "neck",          "head",
      "left_shoulder", "left_elbow",     "left_wrist",    "left_hand",
      "right_shoulder","right_elbow",    "right_wrist",   "right_hand",
      "left_hip",      "left_knee",      "left_ankle",    "left_foot",
      "right_hip",     "right_knee",     "right_ankle",   "right_foot",
      "spine_shoulder","left_hand_tip",  "left_thumb",    "right_hand_tip",
      "right_thumb",
  };
  return make_topology(25, std::move(bones), std::move(names));
}

JointTopology load_topology(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("topology file " + path.string() + ": " + e.what());
  }
  if (!doc.contains("joint_count") || !doc.contains("edges")) {
    throw ParseError("topology file " + path.string() +
                     ": missing joint_count or edges");
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : doc.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw ParseError("topology file " + path.string() +
                       ": edges must be [i, j] pairs");
    }
    edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  std::vector<std::string> names;
  if (doc.contains("names")) {
    names = doc.at("names").get<std::vector<std::string>>();
  }
  try {
    return make_topology(doc.at("joint_count").get<int>(), std::move(edges),
                         std::move(names));
  } catch (const ConfigError& e) {
    throw ParseError("topology file " + path.string() + ": " + e.what());
  }
}

void save_topology(const std::filesystem::path& path,
                   const JointTopology& topology) {
  nlohmann::json doc;
  doc["joint_count"] = topology.joint_count;
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : topology.edges) {
    edges.push_back({a, b});
  }
  doc["edges"] = edges;
  if (!topology.names.empty()) {
    doc["names"] = topology.names;
  }
  io::write_text_file(path, doc.dump(2) + "\n");
}

Tensor build_adjacency(const JointTopology& topology) {
  topology.validate();
  const int n = topology.joint_count;
  Tensor adjacency({n, n});
  for (const auto& [a, b] : topology.edges) {
    adjacency(a, b) = 1.0;
    adjacency(b, a) = 1.0;
  }
  return adjacency;
}

Tensor normalize_adjacency(const Tensor& adjacency) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw ShapeError("normalize_adjacency expects a square matrix, got " +
                     dims_to_string(adjacency.dims()));
  }
  const int n = adjacency.dim(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) {
        throw DataError("normalize_adjacency: entries must be 0 or 1");
      }
      if (i == j && a != 0.0) {
        throw DataError("normalize_adjacency: diagonal must be zero");
      }
      if (adjacency(i, j) != adjacency(j, i)) {
        throw DataError("normalize_adjacency: matrix must be symmetric");
      }
    }
  }
  // Degrees of A + I; the self-loop guarantees every degree is >= 1.
  std::vector<double> inv_sqrt_degree(n);
  for (int i = 0; i < n; ++i) {
    double degree = 1.0;
    for (int j = 0; j < n; ++j) degree += adjacency(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  Tensor normalized({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double with_loops = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      normalized(i, j) = inv_sqrt_degree[i] * with_loops * inv_sqrt_degree[j];
    }
  }
  return normalized;
}

}  // namespace zsar
