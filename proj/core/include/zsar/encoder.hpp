#pragma once

#include <filesystem>
#include <vector>

#include "zsar/features.hpp"
#include "zsar/graph.hpp"
#include "zsar/optim.hpp"
#include "zsar/rng.hpp"
#include "zsar/skeleton.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// Compact spatio-temporal graph-convolution encoder. Each block applies a
// spatial graph convolution, a per-joint temporal convolution, and ReLU;
// global average pooling over frames and joints followed by a mean over
// person streams yields the visual feature, and a linear softmax
// classifier over the seen classes sits on top for training.
struct EncoderConfig {
  std::vector<int> block_channels = {8, 16};
  int temporal_kernel = 3;  // odd
  int frames = 20;          // shorter inputs are zero-padded, longer center-cropped
  int in_channels = 3;
  int num_seen_classes = 0;
  int epochs = 20;
  int batch_size = 16;
  SgdConfig optimizer{0.01, 0.9, 0.0001};

  int feature_dim() const {
    return block_channels.empty() ? 0 : block_channels.back();
  }
  void validate() const;
};

struct EncoderModel {
  EncoderConfig config;
  JointTopology topology;
  Tensor adjacency;  // normalized, V x V

  std::vector<Tensor> spatial_weights;   // per block, [C_in, C_out]
  std::vector<Tensor> temporal_kernels;  // per block, [C_out, C_out, K]
  Tensor classifier_weight;              // [F, num_seen_classes]
  Tensor classifier_bias;                // [num_seen_classes]

  // Global class ids covered by the classifier; logit i corresponds to
  // seen_classes[i].
  std::vector<int> seen_classes;

  int feature_dim() const { return config.feature_dim(); }
  int block_count() const { return static_cast<int>(spatial_weights.size()); }
  // Position of a global class id among the seen classes, or -1.
  int seen_index_of(int global_class) const;
};

// Per-frame propagation along the normalized adjacency:
// output[t] = a_norm * X[t] * W.
Tensor spatial_graph_conv(const Tensor& X, const Tensor& a_norm,
                          const Tensor& W);

// Per-joint 1-D convolution along time mixing channels, zero-padded by
// (K-1)/2 frames on each end so the length is preserved.
// kernel[c_out][c_in][k].
Tensor temporal_conv(const Tensor& X, const Tensor& kernel);

struct EncoderOutput {
  Tensor logits;   // [num_seen_classes]
  Tensor feature;  // [F], pooled pre-classifier vector
};

EncoderOutput encoder_forward(const EncoderModel& model,
                              const SkeletonSequence& sequence);

EncoderModel init_encoder(const EncoderConfig& config,
                          const JointTopology& topology,
                          const std::vector<int>& seen_classes, Rng& rng);

// Minimizes softmax cross-entropy over the seen classes with mini-batch
// momentum SGD. Any sample whose label is outside seen_classes raises
// ContaminationError before any training happens.
EncoderModel train_encoder(const std::vector<SkeletonSequence>& data,
                           const EncoderConfig& config,
                           const JointTopology& topology,
                           const std::vector<int>& seen_classes, Rng& rng);

// Row i is the feature of data[i]; rows unit-normalized when requested.
VisualFeatureMatrix extract_features(const EncoderModel& model,
                                     const std::vector<SkeletonSequence>& data,
                                     bool normalize);

// Raw seen-class prediction: the global class id of the argmax logit.
int classify_seen(const EncoderModel& model, const SkeletonSequence& sequence);

// Checkpoint: magic "ZSTG", version u32, JSON header (config, topology,
// seen classes), then weight tensors in block order followed by the
// classifier, as little-endian 32-bit floats.
void save_encoder(const std::filesystem::path& path, const EncoderModel& model);
EncoderModel load_encoder(const std::filesystem::path& path);

namespace detail {

// Intermediate activations of one person stream, kept for backprop and
// inspection in tests.
struct BlockTrace {
  Tensor propagated;    // a_norm * X, [T, V, C_in]
  Tensor post_spatial;  // propagated * W, [T, V, C_out]
  Tensor pre_relu;      // after temporal conv, [T, V, C_out]
  Tensor output;        // after ReLU (or pre_relu copy when disabled)
};

struct PersonTrace {
  Tensor input;  // [T, V, in_channels]
  std::vector<BlockTrace> blocks;
  Tensor pooled;  // [F]
};

// Pads or center-crops one person's stream to target_frames.
Tensor preprocess_person(const SkeletonSequence& sequence, int person,
                         int target_frames);

// use_relu=false runs the purely linear stack; tests use it to check
// scaling behavior.
PersonTrace person_forward(const EncoderModel& model, const Tensor& stream,
                           bool use_relu = true);

// Smallest |pre-ReLU activation| across all blocks; gradient-check tests
// resample instances that sit too close to a kink.
double min_abs_pre_relu(const PersonTrace& trace);

struct EncoderGradients {
  std::vector<Tensor> spatial_weights;
  std::vector<Tensor> temporal_kernels;
  Tensor classifier_weight;
  Tensor classifier_bias;
};

EncoderGradients zero_gradients(const EncoderModel& model);

// Cross-entropy of one sample; accumulates parameter gradients scaled by
// `scale` into grads and returns the loss.
double cross_entropy_backward(const EncoderModel& model,
                              const SkeletonSequence& sequence,
                              EncoderGradients& grads, double scale);

double cross_entropy_loss(const EncoderModel& model,
                          const SkeletonSequence& sequence);

}  // namespace detail

}  // namespace zsar
