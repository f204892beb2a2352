#include "zsar/dataset.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

void save_manifest(const std::filesystem::path& dataset_dir,
                   const DatasetManifest& manifest) {
  nlohmann::json doc;
  doc["classes"] = manifest.classes;
  doc["persons"] = manifest.persons;
  doc["frames"] = manifest.frames;
  doc["joints"] = manifest.joints;
  doc["topology"] = manifest.topology_file;
  doc["embeddings"] = manifest.embeddings_file;
  auto samples = nlohmann::json::array();
  for (const auto& sample : manifest.samples) {
    samples.push_back({{"id", sample.id},
                       {"label", sample.label},
                       {"label_index", sample.label_index},
                       {"file", sample.file}});
  }
  doc["samples"] = samples;
  io::write_text_file(dataset_dir / "manifest.json", doc.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
  const auto path = dataset_dir / "manifest.json";
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest manifest;
  try {
    manifest.classes = doc.at("classes").get<std::vector<std::string>>();
    manifest.persons = doc.at("persons").get<int>();
    manifest.frames = doc.at("frames").get<int>();
    manifest.joints = doc.at("joints").get<int>();
    manifest.topology_file = doc.at("topology").get<std::string>();
    manifest.embeddings_file = doc.at("embeddings").get<std::string>();
    for (const auto& entry : doc.at("samples")) {
      DatasetSample sample;
      sample.id = entry.at("id").get<std::string>();
      sample.label = entry.at("label").get<std::string>();
      sample.label_index = entry.at("label_index").get<int>();
      sample.file = entry.at("file").get<std::string>();
      manifest.samples.push_back(std::move(sample));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  std::set<std::string> unique(manifest.classes.begin(),
                               manifest.classes.end());
  if (unique.size() != manifest.classes.size()) {
    throw DataError("manifest " + path.string() + ": duplicate class labels");
  }
  const int class_count = static_cast<int>(manifest.classes.size());
  for (const auto& sample : manifest.samples) {
    if (sample.label_index < 0 || sample.label_index >= class_count) {
      throw DataError("manifest " + path.string() + ": sample " + sample.id +
                      " has label index " + std::to_string(sample.label_index) +
                      " outside " + std::to_string(class_count) + " classes");
    }
    if (manifest.classes[static_cast<std::size_t>(sample.label_index)] !=
        sample.label) {
      throw DataError("manifest " + path.string() + ": sample " + sample.id +
                      " label '" + sample.label +
                      "' does not match its index");
    }
  }
  return manifest;
}

void save_sample(const std::filesystem::path& dataset_dir,
                 const DatasetSample& entry,
                 const SkeletonSequence& sequence) {
  io::save_tensor(dataset_dir / entry.file, sequence.coords);
}

SkeletonSequence load_sample(const std::filesystem::path& dataset_dir,
                             const DatasetManifest& manifest,
                             const DatasetSample& entry) {
  SkeletonSequence sequence;
  sequence.coords = io::load_tensor(dataset_dir / entry.file);
  if (sequence.coords.rank() != 4 || sequence.coords.dim(3) != 3) {
    throw DataError("sample " + entry.id + ": coordinate tensor dims " +
                    dims_to_string(sequence.coords.dims()) +
                    " are not [persons, frames, joints, 3]");
  }
  sequence.persons = sequence.coords.dim(0);
  sequence.frames = sequence.coords.dim(1);
  sequence.joints = sequence.coords.dim(2);
  if (sequence.joints != manifest.joints) {
    throw DataError("sample " + entry.id + ": " +
                    std::to_string(sequence.joints) +
                    " joints, manifest declares " +
                    std::to_string(manifest.joints));
  }
  sequence.label_index = entry.label_index;
  sequence.id = entry.id;
  return sequence;
}

std::vector<SkeletonSequence> load_all_samples(
    const std::filesystem::path& dataset_dir,
    const DatasetManifest& manifest) {
  std::vector<SkeletonSequence> sequences;
  sequences.reserve(manifest.samples.size());
  for (const auto& entry : manifest.samples) {
    sequences.push_back(load_sample(dataset_dir, manifest, entry));
  }
  return sequences;
}

JointTopology load_dataset_topology(const std::filesystem::path& dataset_dir,
                                    const DatasetManifest& manifest) {
  return load_topology(dataset_dir / manifest.topology_file);
}

}  // namespace zsar
