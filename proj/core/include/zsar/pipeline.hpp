#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zsar/devise.hpp"
#include "zsar/encoder.hpp"
#include "zsar/evaluator.hpp"
#include "zsar/relation.hpp"
#include "zsar/splits.hpp"
#include "zsar/synthetic.hpp"

namespace zsar {

struct EmbeddingSourceConfig {
  std::string source = "file";  // "file" | "random"
  std::string path;             // file source; empty = the dataset's table
  int dim = 0;                  // random source; 0 = match the dataset table
};

struct SplitConfig {
  SplitStrategy strategy = SplitStrategy::nearest;
  int unseen_count = 5;
  DistanceMetric metric = DistanceMetric::cosine;
  double diversity_floor = 0.0;
  IsolationKind isolation = IsolationKind::nearest_neighbor;
};

// One experiment, serializable as a single JSON document. Defaults follow
// the full-scale training recipe; desk-scale runs override them in the
// config file.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::string dataset_dir;  // existing dataset; empty when synthetic is set
  std::optional<SyntheticSpec> synthetic;
  EncoderConfig encoder;
  EmbeddingSourceConfig embeddings;
  SplitConfig split;
  bool run_devise = true;
  DeviseHyper devise;
  bool run_relation = true;
  RelationHyper relation;
  std::vector<int> eval_ks = {1, 5};

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical serialization with every default resolved; echoed into
// reports for provenance.
std::string experiment_config_to_json(const ExperimentConfig& config);

// Stage names double as seed-derivation keys:
// component seed = Rng::derive_seed(master_seed, stage name).
inline constexpr const char* kStageGenerate = "generate";
inline constexpr const char* kStageRandomEmbeddings = "embeddings-random";
inline constexpr const char* kStageSplit = "split";
inline constexpr const char* kStageEncoder = "encoder";
inline constexpr const char* kStageDevise = "devise";
inline constexpr const char* kStageRelation = "relation";

struct PipelineResult {
  std::filesystem::path dataset_dir;
  std::filesystem::path split_file;
  std::filesystem::path encoder_file;
  std::filesystem::path seen_features_file;
  std::filesystem::path unseen_features_file;
  std::vector<std::filesystem::path> head_files;
  std::vector<std::filesystem::path> report_files;
  std::filesystem::path summary_csv;
  std::filesystem::path run_summary;
  // (stage name, "computed" | "reused")
  std::vector<std::pair<std::string, std::string>> stages;
};

// Runs dataset -> split -> encoder -> features -> heads -> evaluation,
// persisting every intermediate under out_dir and reusing existing valid
// intermediates unless force is set. Every stage reads its inputs back
// from the persisted files, so resumed and fresh runs see identical
// 32-bit interchange values and one master seed fixes every artifact.
PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir, bool force);

}  // namespace zsar
