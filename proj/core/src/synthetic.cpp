#include "zsar/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "zsar/embeddings.hpp"
#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

void SyntheticSpec::validate() const {
  if (class_count < 2) {
    throw ConfigError("synthetic: class_count must be >= 2");
  }
  if (samples_per_class < 1 || frames < 2 || joints < 2 || persons < 1) {
    throw ConfigError("synthetic: counts must be positive (frames/joints >= 2)");
  }
  if (group_size < 2) {
    throw ConfigError("synthetic: group_size must be >= 2");
  }
  if (grouped_count < 0 || grouped_count > class_count ||
      grouped_count % group_size != 0) {
    throw ConfigError(
        "synthetic: grouped_count must be a multiple of group_size within "
        "class_count");
  }
  if (frequency_min <= 0 || frequency_max < frequency_min) {
    throw ConfigError("synthetic: need 0 < frequency_min <= frequency_max");
  }
  if (within_group_jitter < 0 || noise_scale < 0 || pose_scale <= 0 ||
      amplitude_scale <= 0) {
    throw ConfigError("synthetic: scales must be positive, jitters >= 0");
  }
  if (embedding_dim < 1) {
    throw ConfigError("synthetic: embedding_dim must be >= 1");
  }
  if (correlated_embeddings && embedding_dim < motion_parameter_count()) {
    throw ConfigError("synthetic: embedding_dim " +
                      std::to_string(embedding_dim) +
                      " cannot hold the motion parameter vector of " +
                      std::to_string(motion_parameter_count()) + " entries");
  }
}

namespace {

struct ClassMotion {
  Tensor pose;       // [V, 3]
  Tensor amplitude;  // [V, 3]
  Tensor frequency;  // [V], cycles over the clip
};

ClassMotion draw_motion(const SyntheticSpec& spec, Rng& rng) {
  ClassMotion motion;
  motion.pose = Tensor({spec.joints, 3});
  for (std::size_t i = 0; i < motion.pose.size(); ++i) {
    motion.pose[i] = spec.pose_scale * rng.normal();
  }
  motion.amplitude = Tensor({spec.joints, 3});
  for (std::size_t i = 0; i < motion.amplitude.size(); ++i) {
    motion.amplitude[i] = spec.amplitude_scale * rng.normal();
  }
  motion.frequency = Tensor({spec.joints});
  for (std::size_t i = 0; i < motion.frequency.size(); ++i) {
    motion.frequency[i] = rng.uniform(spec.frequency_min, spec.frequency_max);
  }
  return motion;
}

ClassMotion jitter_motion(const SyntheticSpec& spec, const ClassMotion& proto,
                          Rng& rng) {
  ClassMotion motion = proto;
  const double jitter = spec.within_group_jitter;
  for (std::size_t i = 0; i < motion.pose.size(); ++i) {
    motion.pose[i] += jitter * spec.pose_scale * rng.normal();
  }
  for (std::size_t i = 0; i < motion.amplitude.size(); ++i) {
    motion.amplitude[i] += jitter * spec.amplitude_scale * rng.normal();
  }
  const double freq_span = spec.frequency_max - spec.frequency_min;
  for (std::size_t i = 0; i < motion.frequency.size(); ++i) {
    motion.frequency[i] += jitter * freq_span * rng.normal();
    motion.frequency[i] = std::max(0.05, motion.frequency[i]);
  }
  return motion;
}

Tensor motion_parameter_vector(const SyntheticSpec& spec,
                               const ClassMotion& motion) {
  Tensor raw({spec.motion_parameter_count()});
  std::size_t at = 0;
  for (std::size_t i = 0; i < motion.pose.size(); ++i) raw[at++] = motion.pose[i];
  for (std::size_t i = 0; i < motion.amplitude.size(); ++i) {
    raw[at++] = motion.amplitude[i];
  }
  for (std::size_t i = 0; i < motion.frequency.size(); ++i) {
    raw[at++] = motion.frequency[i];
  }
  return raw;
}

// Heap-shaped tree: joint i attaches to (i - 1) / 2. Connected, and gives
// the adjacency some degree variation unlike a plain chain.
JointTopology synthetic_topology(int joints) {
  std::vector<std::pair<int, int>> edges;
  std::vector<std::string> names;
  for (int v = 0; v < joints; ++v) {
    if (v > 0) edges.emplace_back((v - 1) / 2, v);
    names.push_back("joint_" + std::to_string(v));
  }
  return make_topology(joints, std::move(edges), std::move(names));
}

std::string formatted_index(const char* prefix, int value, int width) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%s%0*d", prefix, width, value);
  return buffer;
}

}  // namespace

DatasetManifest generate_synthetic_dataset(
    const SyntheticSpec& spec, Rng& rng,
    const std::filesystem::path& dataset_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(dataset_dir / "samples", ec);
  if (ec) {
    throw IoError("cannot create dataset directory " + dataset_dir.string() +
                  ": " + ec.message());
  }

  // Class motion parameters. Draw order: per group one prototype followed
  // by its members' jitters, then the singleton classes.
  std::vector<ClassMotion> motions;
  motions.reserve(static_cast<std::size_t>(spec.class_count));
  const int groups = spec.grouped_count / spec.group_size;
  for (int g = 0; g < groups; ++g) {
    const ClassMotion proto = draw_motion(spec, rng);
    for (int m = 0; m < spec.group_size; ++m) {
      motions.push_back(jitter_motion(spec, proto, rng));
    }
  }
  for (int c = spec.grouped_count; c < spec.class_count; ++c) {
    motions.push_back(draw_motion(spec, rng));
  }

  DatasetManifest manifest;
  manifest.persons = spec.persons;
  manifest.frames = spec.frames;
  manifest.joints = spec.joints;
  const int label_width = spec.class_count > 100 ? 3 : 2;
  for (int c = 0; c < spec.class_count; ++c) {
    manifest.classes.push_back(formatted_index("action ", c, label_width));
  }

  // Embeddings: either the unit-normalized motion parameters (padded to
  // embedding_dim) or a random table drawn from the same stream.
  LabelEmbeddingTable table;
  if (spec.correlated_embeddings) {
    table.labels = manifest.classes;
    table.embeddings = Tensor({spec.class_count, spec.embedding_dim});
    for (int c = 0; c < spec.class_count; ++c) {
      const Tensor raw = motion_parameter_vector(
          spec, motions[static_cast<std::size_t>(c)]);
      const Tensor normalized = unit_normalize(raw);
      auto row = table.embeddings.row(c);
      for (std::size_t i = 0; i < normalized.size(); ++i) {
        row[i] = normalized[i];
      }
    }
    table.normalized = true;
  } else {
    table = random_embeddings(manifest.classes, spec.embedding_dim, rng);
  }

  const JointTopology topology = synthetic_topology(spec.joints);
  save_topology(dataset_dir / manifest.topology_file, topology);
  save_embeddings(dataset_dir / manifest.embeddings_file, table);

  const double two_pi = 2.0 * std::numbers::pi;
  for (int c = 0; c < spec.class_count; ++c) {
    const ClassMotion& motion = motions[static_cast<std::size_t>(c)];
    for (int s = 0; s < spec.samples_per_class; ++s) {
      SkeletonSequence sequence = make_sequence(
          spec.persons, spec.frames, spec.joints, c,
          formatted_index("c", c, label_width) + "_" +
              formatted_index("s", s, 3));
      for (int p = 0; p < spec.persons; ++p) {
        const double phase = rng.uniform(0.0, two_pi);
        const double amp_jitter = rng.uniform(0.9, 1.1);
        for (int t = 0; t < spec.frames; ++t) {
          const double progress = static_cast<double>(t) / spec.frames;
          for (int v = 0; v < spec.joints; ++v) {
            const double angle = two_pi * motion.frequency(v) * progress + phase;
            const double wave = std::sin(angle);
            for (int ax = 0; ax < 3; ++ax) {
              sequence.coords(p, t, v, ax) =
                  motion.pose(v, ax) +
                  amp_jitter * motion.amplitude(v, ax) * wave +
                  spec.noise_scale * rng.normal();
            }
          }
        }
      }
      DatasetSample entry;
      entry.id = sequence.id;
      entry.label = manifest.classes[static_cast<std::size_t>(c)];
      entry.label_index = c;
      entry.file = "samples/" + sequence.id + ".ztns";
      save_sample(dataset_dir, entry, sequence);
      manifest.samples.push_back(std::move(entry));
    }
  }
  save_manifest(dataset_dir, manifest);
  return manifest;
}

}  // namespace zsar
