#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "zsar/embeddings.hpp"
#include "zsar/features.hpp"
#include "zsar/rng.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// Which label embeddings an episode compares against: the whole table
// (unseen embeddings included) or the seen classes only.
enum class CandidateSet { all_classes, seen_only };

std::string to_string(CandidateSet set);
CandidateSet candidate_set_from_string(const std::string& name);

// Projects a label embedding into feature space: D -> H_a -> F with ReLU
// after the first layer. Weights are stored [in, out]; apply is
// x^T W + b.
struct AttributeNet {
  Tensor w1;  // [D, H_a]
  Tensor b1;  // [H_a]
  Tensor w2;  // [H_a, F]
  Tensor b2;  // [F]
};

// Scores a (projected embedding, visual feature) pair: 2F -> H_r -> 1
// with ReLU after the first layer and sigmoid at the output.
struct RelationNet {
  Tensor w1;  // [2F, H_r]
  Tensor b1;  // [H_r]
  Tensor w2;  // [H_r, 1]
  Tensor b2;  // [1]
};

struct RelationHyper {
  int episodes = 400000;
  int batch_size = 32;
  double learning_rate = 1e-5;
  std::int64_t lr_step_size = 200000;
  double lr_gamma = 0.5;
  int hidden_attr = 0;  // 0 selects the default 2 * embedding_dim
  int hidden_rel = 0;   // 0 selects the default feature_dim
  CandidateSet candidate_set = CandidateSet::all_classes;
  double init_std = 0.01;

  void validate() const;
};

// One training step's batch: features sampled with replacement from the
// seen-class pool, compared against every candidate embedding with
// binary match targets.
struct Episode {
  Tensor features;              // [B, F]
  std::vector<int> labels;      // global class ids, length B
  std::vector<int> candidates;  // class ids, length C'
  Tensor targets;               // [B, C'], one-hot rows
};

// sigmoid(rel(concat(attr(embedding), feature))); concatenation order is
// projected embedding first, then the feature.
double relation_score(const AttributeNet& attr, const RelationNet& rel,
                      std::span<const double> embedding,
                      std::span<const double> feature);

Episode sample_episode(const VisualFeatureMatrix& features,
                       const LabelEmbeddingTable& table,
                       const std::vector<int>& candidates, int batch_size,
                       Rng& rng);

struct RelationGradients {
  AttributeNet attr;
  RelationNet rel;
};

// Mean squared error over all (sample, candidate) pairs, with
// hand-derived gradients through sigmoid, the affine layers, ReLU, and
// the concatenation split.
struct EpisodeLoss {
  double loss = 0.0;
  RelationGradients grads;
};

EpisodeLoss episode_loss(const AttributeNet& attr, const RelationNet& rel,
                         const LabelEmbeddingTable& table,
                         const Episode& episode);

struct RelationModel {
  AttributeNet attr;
  RelationNet rel;
  std::vector<double> episode_losses;  // one entry per training episode
};

// Adam with step decay over hyper.episodes episodes. Features with labels
// outside seen_classes raise ContaminationError.
RelationModel train_relation(const VisualFeatureMatrix& features,
                             const LabelEmbeddingTable& table,
                             const std::vector<int>& seen_classes,
                             const RelationHyper& hyper, Rng& rng);

// Candidates ranked by descending relation score; ties break toward the
// lower class index.
std::vector<std::pair<int, double>> predict_relation(
    const AttributeNet& attr, const RelationNet& rel,
    std::span<const double> feature, const std::vector<int>& candidates,
    const LabelEmbeddingTable& table);

AttributeNet init_attribute_net(int embedding_dim, int hidden, int feature_dim,
                                double init_std, Rng& rng);
RelationNet init_relation_net(int feature_dim, int hidden, double init_std,
                              Rng& rng);

// Checkpoint: magic "ZREL", version u32, JSON header (dims, hyper), then
// attr.w1, b1, w2, b2, rel.w1, b1, w2, b2 as little-endian 32-bit floats.
void save_relation(const std::filesystem::path& path, const AttributeNet& attr,
                   const RelationNet& rel, const RelationHyper& hyper);
struct LoadedRelation {
  AttributeNet attr;
  RelationNet rel;
  RelationHyper hyper;
};
LoadedRelation load_relation(const std::filesystem::path& path);

namespace detail {

// Smallest |pre-ReLU activation| across both nets over a whole episode;
// gradient-check tests resample instances that sit on a kink.
double episode_min_abs_pre_relu(const AttributeNet& attr,
                                const RelationNet& rel,
                                const LabelEmbeddingTable& table,
                                const Episode& episode);

}  // namespace detail

}  // namespace zsar
