#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zsar/graph.hpp"
#include "zsar/skeleton.hpp"

namespace zsar {

// On-disk dataset layout: a directory with manifest.json, topology.json,
// embeddings.csv, and one "ZTNS" tensor file per sample under samples/.
struct DatasetSample {
  std::string id;
  std::string label;
  int label_index = -1;
  std::string file;  // relative to the dataset directory
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<DatasetSample> samples;
  int persons = 1;
  int frames = 0;
  int joints = 0;
  std::string topology_file = "topology.json";
  std::string embeddings_file = "embeddings.csv";
};

void save_manifest(const std::filesystem::path& dataset_dir,
                   const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

void save_sample(const std::filesystem::path& dataset_dir,
                 const DatasetSample& entry, const SkeletonSequence& sequence);
SkeletonSequence load_sample(const std::filesystem::path& dataset_dir,
                             const DatasetManifest& manifest,
                             const DatasetSample& entry);

std::vector<SkeletonSequence> load_all_samples(
    const std::filesystem::path& dataset_dir, const DatasetManifest& manifest);

JointTopology load_dataset_topology(const std::filesystem::path& dataset_dir,
                                    const DatasetManifest& manifest);

}  // namespace zsar
