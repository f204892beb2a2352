#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zsar/tensor.hpp"

namespace zsar {

// Body-joint graph: joints are nodes, anatomical bones are undirected
// edges. Edges are stored canonically as (low, high) pairs, sorted and
// deduplicated. Self-loops enter only during adjacency normalization.
struct JointTopology {
  int joint_count = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::string> names;  // empty or one per joint

  // Throws ConfigError unless indices are in range, there are no
  // self-loops, names (when present) match joint_count, and the graph is
  // connected.
  void validate() const;
};

// Canonicalizes edge order/duplicates and validates.
JointTopology make_topology(int joint_count,
                            std::vector<std::pair<int, int>> edges,
                            std::vector<std::string> names = {});

// The 25-joint full-scale skeleton: a tree of 24 bones over the standard
// Kinect-style joint set (spine, head, arms with hand tips and thumbs,
// legs with feet).
JointTopology ntu25_topology();

// Topology file: JSON {joint_count, names?, edges: [[i, j], ...]}.
JointTopology load_topology(const std::filesystem::path& path);
void save_topology(const std::filesystem::path& path,
                   const JointTopology& topology);

// Binary symmetric adjacency with zero diagonal; A[i][j] = 1 iff {i, j}
// is a bone.
Tensor build_adjacency(const JointTopology& topology);

// Symmetric normalization with self-loops:
//   D^(-1/2) (A + I) D^(-1/2),  D = degree matrix of (A + I).
// The result is symmetric, nonnegative, and has spectral radius <= 1.
Tensor normalize_adjacency(const Tensor& adjacency);

}  // namespace zsar
