#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "zsar/embeddings.hpp"
#include "zsar/features.hpp"
#include "zsar/rng.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// Which classes act as negatives in the hinge rank loss: every class in
// the table (unseen label embeddings included), or the seen set only.
enum class NegativeSet { all_classes, seen_only };

std::string to_string(NegativeSet set);
NegativeSet negative_set_from_string(const std::string& name);

struct DeviseHyper {
  double margin = 0.1;
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 100;
  NegativeSet negative_set = NegativeSet::all_classes;
  // Zero init gives the exact analytic starting loss margin * |negatives|;
  // Gaussian init is available behind this flag.
  bool gaussian_init = false;
  double init_std = 0.01;

  void validate() const;
};

// Linear projection into the embedding space: score of class j for
// feature v is t_j^T M v.
struct DeviseProjection {
  Tensor matrix;  // D x F

  int embedding_dim() const { return matrix.empty() ? 0 : matrix.dim(0); }
  int feature_dim() const { return matrix.empty() ? 0 : matrix.dim(1); }
};

// Hinge rank loss of one sample:
//   sum_{j != label} max(0, margin - t_label^T M v + t_j^T M v)
// over the given negative candidate list (the true label is skipped if
// present). The gradient is the exact subgradient with boundary terms
// (value exactly zero) treated as inactive:
//   sum over active j of (t_j - t_label) v^T.
struct DeviseLoss {
  double loss = 0.0;
  Tensor grad;  // D x F
};

DeviseLoss hinge_rank_loss(const DeviseProjection& projection,
                           std::span<const double> feature, int label,
                           const LabelEmbeddingTable& table, double margin,
                           const std::vector<int>& negatives);

// Mini-batch momentum SGD on the batch-mean hinge rank loss. Negatives
// are all table classes or the seen set per hyper.negative_set. Features
// with labels outside seen_classes raise ContaminationError.
DeviseProjection train_devise(const VisualFeatureMatrix& features,
                              const LabelEmbeddingTable& table,
                              const std::vector<int>& seen_classes,
                              const DeviseHyper& hyper, Rng& rng);

// Candidates ranked by descending t_j^T M v; ties break toward the lower
// class index.
std::vector<std::pair<int, double>> predict_devise(
    const DeviseProjection& projection, std::span<const double> feature,
    const std::vector<int>& candidates, const LabelEmbeddingTable& table);

// Checkpoint: magic "ZDVS", version u32, JSON header (dims, hyper), then
// M as little-endian 32-bit floats.
void save_devise(const std::filesystem::path& path,
                 const DeviseProjection& projection, const DeviseHyper& hyper);
std::pair<DeviseProjection, DeviseHyper> load_devise(
    const std::filesystem::path& path);

}  // namespace zsar
