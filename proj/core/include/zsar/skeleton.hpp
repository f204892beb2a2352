#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zsar/graph.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// One action sample: (X, Y, Z) joint trajectories for up to `persons`
// performers plus a class label. Absent persons are all-zero slices.
struct SkeletonSequence {
  int persons = 0;
  int frames = 0;
  int joints = 0;
  Tensor coords;  // [persons, frames, joints, 3]
  int label_index = -1;
  std::string id;
};

SkeletonSequence make_sequence(int persons, int frames, int joints,
                               int label_index, std::string id = {});

struct SequenceDiagnostics {
  bool ok = true;
  std::vector<std::string> issues;
};

// Structural checks that never throw: coordinate tensor shape against the
// declared counts and topology, finiteness (issues name
// person/frame/joint/axis), and label range when class_count is given.
SequenceDiagnostics validate_sequence(const SkeletonSequence& sequence,
                                      const JointTopology& topology,
                                      std::optional<int> class_count = {});

}  // namespace zsar
