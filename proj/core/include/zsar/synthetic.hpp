#pragma once

#include <filesystem>

#include "zsar/dataset.hpp"
#include "zsar/rng.hpp"

namespace zsar {

// Parameters of the synthetic benchmark generator. Each class is defined
// by a base skeleton pose plus sinusoidal joint trajectories (amplitude
// and frequency per joint axis); samples are noisy realizations with a
// random global phase. Classes come in two kinds:
//   - grouped: the first grouped_count classes form groups of group_size
//     whose motion parameters are small jitters of a shared prototype, so
//     group siblings are similar both visually and in embedding space;
//   - singleton: the rest draw independent parameters and have no close
//     neighbor anywhere.
// With correlated_embeddings set, each class's emitted embedding is its
// unit-normalized motion-parameter vector zero-padded to embedding_dim,
// which ties language-space similarity to visual similarity.
struct SyntheticSpec {
  int class_count = 12;
  int samples_per_class = 30;
  int frames = 20;
  int joints = 7;
  int persons = 1;

  int group_size = 2;
  int grouped_count = 8;  // must be a multiple of group_size

  double pose_scale = 1.0;
  double amplitude_scale = 0.6;
  double frequency_min = 0.5;
  double frequency_max = 2.0;
  double within_group_jitter = 0.1;
  double noise_scale = 0.05;

  int embedding_dim = 64;
  bool correlated_embeddings = true;

  void validate() const;
  // pose (3V) + amplitude (3V) + frequency (V) entries
  int motion_parameter_count() const { return 7 * joints; }
};

// Writes manifest.json, topology.json, embeddings.csv, and
// samples/<id>.ztns under dataset_dir; returns the manifest. All draws
// come from rng in a fixed documented order, so one seed reproduces the
// dataset byte for byte.
DatasetManifest generate_synthetic_dataset(
    const SyntheticSpec& spec, Rng& rng,
    const std::filesystem::path& dataset_dir);

}  // namespace zsar
