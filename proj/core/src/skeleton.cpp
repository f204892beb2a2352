#include "zsar/skeleton.hpp"

#include <cmath>

namespace zsar {

SkeletonSequence make_sequence(int persons, int frames, int joints,
                               int label_index, std::string id) {
  SkeletonSequence seq;
  seq.persons = persons;
  seq.frames = frames;
  seq.joints = joints;
  seq.coords = Tensor({persons, frames, joints, 3});
  seq.label_index = label_index;
  seq.id = std::move(id);
  return seq;
}

SequenceDiagnostics validate_sequence(const SkeletonSequence& sequence,
                                      const JointTopology& topology,
                                      std::optional<int> class_count) {
  SequenceDiagnostics diag;
  auto report = [&diag](std::string issue) {
    diag.ok = false;
    diag.issues.push_back(std::move(issue));
  };

  if (sequence.persons < 1) {
    report("persons must be >= 1, got " + std::to_string(sequence.persons));
  }
  if (sequence.frames < 1) {
    report("frames must be >= 1, got " + std::to_string(sequence.frames));
  }
  if (sequence.joints != topology.joint_count) {
    report("sequence has " + std::to_string(sequence.joints) +
           " joints but topology declares " +
           std::to_string(topology.joint_count));
  }
  const std::vector<int> expected = {sequence.persons, sequence.frames,
                                     sequence.joints, 3};
  if (sequence.coords.dims() != expected) {
    report("coordinate tensor dims " + dims_to_string(sequence.coords.dims()) +
           " do not match declared " + dims_to_string(expected));
  } else {
    static const char* axis_names[3] = {"X", "Y", "Z"};
    for (int p = 0; p < sequence.persons; ++p) {
      for (int t = 0; t < sequence.frames; ++t) {
        for (int v = 0; v < sequence.joints; ++v) {
          for (int ax = 0; ax < 3; ++ax) {
            if (!std::isfinite(sequence.coords(p, t, v, ax))) {
              report("non-finite coordinate at person " + std::to_string(p) +
                     ", frame " + std::to_string(t) + ", joint " +
                     std::to_string(v) + ", axis " + axis_names[ax]);
            }
          }
        }
      }
    }
  }
  if (class_count.has_value() &&
      (sequence.label_index < 0 || sequence.label_index >= *class_count)) {
    report("label index " + std::to_string(sequence.label_index) +
           " out of range for " + std::to_string(*class_count) + " classes");
  }
  return diag;
}

}  // namespace zsar
