#include "zsar/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

void EncoderConfig::validate() const {
  if (block_channels.empty()) {
    throw ConfigError("encoder: block_channels must be nonempty");
  }
  for (int c : block_channels) {
    if (c <= 0) throw ConfigError("encoder: block channels must be positive");
  }
  if (temporal_kernel <= 0 || temporal_kernel % 2 == 0) {
    throw ConfigError("encoder: temporal_kernel must be odd and positive, got " +
                      std::to_string(temporal_kernel));
  }
  if (frames <= 0) throw ConfigError("encoder: frames must be positive");
  if (in_channels <= 0) throw ConfigError("encoder: in_channels must be positive");
  if (epochs < 0) throw ConfigError("encoder: epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("encoder: batch_size must be positive");
}

int EncoderModel::seen_index_of(int global_class) const {
  for (std::size_t i = 0; i < seen_classes.size(); ++i) {
    if (seen_classes[i] == global_class) return static_cast<int>(i);
  }
  return -1;
}

Tensor spatial_graph_conv(const Tensor& X, const Tensor& a_norm,
                          const Tensor& W) {
  if (X.rank() != 3) {
    throw ShapeError("spatial_graph_conv: input must be [T, V, C], got " +
                     dims_to_string(X.dims()));
  }
  const int frames = X.dim(0);
  const int joints = X.dim(1);
  const int c_in = X.dim(2);
  if (a_norm.rank() != 2 || a_norm.dim(0) != joints || a_norm.dim(1) != joints) {
    throw ShapeError("spatial_graph_conv: adjacency " +
                     dims_to_string(a_norm.dims()) + " does not match " +
                     std::to_string(joints) + " joints");
  }
  if (W.rank() != 2 || W.dim(0) != c_in) {
    throw ShapeError("spatial_graph_conv: weight " + dims_to_string(W.dims()) +
                     " does not match " + std::to_string(c_in) + " channels");
  }
  const int c_out = W.dim(1);

  Tensor propagated({frames, joints, c_in});
  for (int t = 0; t < frames; ++t) {
    for (int v = 0; v < joints; ++v) {
      for (int u = 0; u < joints; ++u) {
        const double a = a_norm(v, u);
        if (a == 0.0) continue;
        for (int c = 0; c < c_in; ++c) {
          propagated(t, v, c) += a * X(t, u, c);
        }
      }
    }
  }
  Tensor out({frames, joints, c_out});
  for (int t = 0; t < frames; ++t) {
    for (int v = 0; v < joints; ++v) {
      for (int ci = 0; ci < c_in; ++ci) {
        const double x = propagated(t, v, ci);
        if (x == 0.0) continue;
        for (int co = 0; co < c_out; ++co) {
          out(t, v, co) += x * W(ci, co);
        }
      }
    }
  }
  return out;
}

Tensor temporal_conv(const Tensor& X, const Tensor& kernel) {
  if (X.rank() != 3) {
    throw ShapeError("temporal_conv: input must be [T, V, C], got " +
                     dims_to_string(X.dims()));
  }
  const int frames = X.dim(0);
  const int joints = X.dim(1);
  const int channels = X.dim(2);
  if (kernel.rank() != 3 || kernel.dim(0) != channels ||
      kernel.dim(1) != channels) {
    throw ShapeError("temporal_conv: kernel " + dims_to_string(kernel.dims()) +
                     " does not match " + std::to_string(channels) +
                     " channels");
  }
  const int taps = kernel.dim(2);
  if (taps % 2 == 0) {
    throw ConfigError("temporal_conv: kernel width must be odd, got " +
                      std::to_string(taps));
  }
  const int offset = (taps - 1) / 2;

  Tensor out({frames, joints, channels});
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < taps; ++k) {
      const int source = t + k - offset;
      if (source < 0 || source >= frames) continue;  // zero padding
      for (int v = 0; v < joints; ++v) {
        for (int ci = 0; ci < channels; ++ci) {
          const double x = X(source, v, ci);
          if (x == 0.0) continue;
          for (int co = 0; co < channels; ++co) {
            out(t, v, co) += kernel(co, ci, k) * x;
          }
        }
      }
    }
  }
  return out;
}

namespace detail {

Tensor preprocess_person(const SkeletonSequence& sequence, int person,
                         int target_frames) {
  const int joints = sequence.joints;
  const int source_frames = sequence.frames;
  Tensor stream({target_frames, joints, 3});
  // Center crop when too long, zero-pad the tail when too short.
  const int start = source_frames > target_frames
                        ? (source_frames - target_frames) / 2
                        : 0;
  const int copy_frames = std::min(source_frames, target_frames);
  for (int t = 0; t < copy_frames; ++t) {
    for (int v = 0; v < joints; ++v) {
      for (int ax = 0; ax < 3; ++ax) {
        stream(t, v, ax) = sequence.coords(person, start + t, v, ax);
      }
    }
  }
  return stream;
}

PersonTrace person_forward(const EncoderModel& model, const Tensor& stream,
                           bool use_relu) {
  PersonTrace trace;
  trace.input = stream;
  const int blocks = model.block_count();
  trace.blocks.resize(static_cast<std::size_t>(blocks));
  const Tensor* current = &trace.input;
  for (int b = 0; b < blocks; ++b) {
    BlockTrace& block = trace.blocks[static_cast<std::size_t>(b)];
    const Tensor& W = model.spatial_weights[static_cast<std::size_t>(b)];
    const Tensor& K = model.temporal_kernels[static_cast<std::size_t>(b)];

    const int frames = current->dim(0);
    const int joints = current->dim(1);
    const int c_in = current->dim(2);

    // Propagation is kept separately from the channel mix so the backward
    // pass can reuse it.
    block.propagated = Tensor({frames, joints, c_in});
    for (int t = 0; t < frames; ++t) {
      for (int v = 0; v < joints; ++v) {
        for (int u = 0; u < joints; ++u) {
          const double a = model.adjacency(v, u);
          if (a == 0.0) continue;
          for (int c = 0; c < c_in; ++c) {
            block.propagated(t, v, c) += a * (*current)(t, u, c);
          }
        }
      }
    }
    const int c_out = W.dim(1);
    block.post_spatial = Tensor({frames, joints, c_out});
    for (int t = 0; t < frames; ++t) {
      for (int v = 0; v < joints; ++v) {
        for (int ci = 0; ci < c_in; ++ci) {
          const double x = block.propagated(t, v, ci);
          if (x == 0.0) continue;
          for (int co = 0; co < c_out; ++co) {
            block.post_spatial(t, v, co) += x * W(ci, co);
          }
        }
      }
    }
    block.pre_relu = temporal_conv(block.post_spatial, K);
    block.output = block.pre_relu;
    if (use_relu) {
      for (std::size_t i = 0; i < block.output.size(); ++i) {
        if (block.output[i] < 0.0) block.output[i] = 0.0;
      }
    }
    current = &block.output;
  }

  const Tensor& last = trace.blocks.empty() ? trace.input
                                            : trace.blocks.back().output;
  const int frames = last.dim(0);
  const int joints = last.dim(1);
  const int channels = last.dim(2);
  trace.pooled = Tensor({channels});
  for (int t = 0; t < frames; ++t) {
    for (int v = 0; v < joints; ++v) {
      for (int c = 0; c < channels; ++c) {
        trace.pooled(c) += last(t, v, c);
      }
    }
  }
  const double scale = 1.0 / (static_cast<double>(frames) * joints);
  for (int c = 0; c < channels; ++c) trace.pooled(c) *= scale;
  return trace;
}

double min_abs_pre_relu(const PersonTrace& trace) {
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& block : trace.blocks) {
    for (std::size_t i = 0; i < block.pre_relu.size(); ++i) {
      smallest = std::min(smallest, std::abs(block.pre_relu[i]));
    }
  }
  return smallest;
}

EncoderGradients zero_gradients(const EncoderModel& model) {
  EncoderGradients grads;
  for (const auto& w : model.spatial_weights) {
    grads.spatial_weights.push_back(Tensor::zeros(w.dims()));
  }
  for (const auto& k : model.temporal_kernels) {
    grads.temporal_kernels.push_back(Tensor::zeros(k.dims()));
  }
  grads.classifier_weight = Tensor::zeros(model.classifier_weight.dims());
  grads.classifier_bias = Tensor::zeros(model.classifier_bias.dims());
  return grads;
}

namespace {

void check_sequence_shape(const EncoderModel& model,
                          const SkeletonSequence& sequence) {
  if (sequence.joints != model.topology.joint_count) {
    throw ShapeError("encoder: sequence has " + std::to_string(sequence.joints) +
                     " joints, model expects " +
                     std::to_string(model.topology.joint_count));
  }
  const std::vector<int> expected = {sequence.persons, sequence.frames,
                                     sequence.joints, 3};
  if (sequence.coords.dims() != expected) {
    throw ShapeError("encoder: coordinate tensor dims " +
                     dims_to_string(sequence.coords.dims()) +
                     " do not match declared counts " +
                     dims_to_string(expected));
  }
  if (sequence.persons < 1) {
    throw ShapeError("encoder: sequence must have at least one person");
  }
}

struct SampleForward {
  std::vector<PersonTrace> persons;
  Tensor feature;  // [F]
  Tensor logits;   // [S]
};

SampleForward sample_forward(const EncoderModel& model,
                             const SkeletonSequence& sequence) {
  check_sequence_shape(model, sequence);
  SampleForward fwd;
  const int feature_dim = model.feature_dim();
  fwd.feature = Tensor({feature_dim});
  for (int p = 0; p < sequence.persons; ++p) {
    Tensor stream = preprocess_person(sequence, p, model.config.frames);
    fwd.persons.push_back(person_forward(model, stream, true));
    for (int c = 0; c < feature_dim; ++c) {
      fwd.feature(c) += fwd.persons.back().pooled(c);
    }
  }
  for (int c = 0; c < feature_dim; ++c) {
    fwd.feature(c) /= static_cast<double>(sequence.persons);
  }
  const int classes = model.classifier_bias.dim(0);
  fwd.logits = Tensor({classes});
  for (int s = 0; s < classes; ++s) fwd.logits(s) = model.classifier_bias(s);
  for (int f = 0; f < feature_dim; ++f) {
    const double x = fwd.feature(f);
    if (x == 0.0) continue;
    for (int s = 0; s < classes; ++s) {
      fwd.logits(s) += x * model.classifier_weight(f, s);
    }
  }
  return fwd;
}

std::vector<double> softmax(const Tensor& logits) {
  double peak = logits(0);
  for (int i = 1; i < logits.dim(0); ++i) peak = std::max(peak, logits(i));
  std::vector<double> probs(static_cast<std::size_t>(logits.dim(0)));
  double total = 0.0;
  for (int i = 0; i < logits.dim(0); ++i) {
    probs[static_cast<std::size_t>(i)] = std::exp(logits(i) - peak);
    total += probs[static_cast<std::size_t>(i)];
  }
  for (double& p : probs) p /= total;
  return probs;
}

// Backpropagates dpooled through one person stream, accumulating weight
// gradients.
void person_backward(const EncoderModel& model, const PersonTrace& trace,
                     const Tensor& dpooled, EncoderGradients& grads) {
  const Tensor& last = trace.blocks.empty() ? trace.input
                                            : trace.blocks.back().output;
  const int frames = last.dim(0);
  const int joints = last.dim(1);
  const double pool_scale = 1.0 / (static_cast<double>(frames) * joints);

  Tensor dout({frames, joints, last.dim(2)});
  for (int t = 0; t < frames; ++t) {
    for (int v = 0; v < joints; ++v) {
      for (int c = 0; c < last.dim(2); ++c) {
        dout(t, v, c) = dpooled(c) * pool_scale;
      }
    }
  }

  for (int b = model.block_count() - 1; b >= 0; --b) {
    const BlockTrace& block = trace.blocks[static_cast<std::size_t>(b)];
    const Tensor& W = model.spatial_weights[static_cast<std::size_t>(b)];
    const Tensor& K = model.temporal_kernels[static_cast<std::size_t>(b)];
    Tensor& dW = grads.spatial_weights[static_cast<std::size_t>(b)];
    Tensor& dK = grads.temporal_kernels[static_cast<std::size_t>(b)];

    const int channels = block.pre_relu.dim(2);
    const int taps = K.dim(2);
    const int offset = (taps - 1) / 2;

    // ReLU: pass gradient only where the pre-activation was positive.
    Tensor dpre = dout;
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      if (block.pre_relu[i] <= 0.0) dpre[i] = 0.0;
    }

    // Temporal convolution backward.
    Tensor dpost_spatial({frames, joints, channels});
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < taps; ++k) {
        const int source = t + k - offset;
        if (source < 0 || source >= frames) continue;
        for (int v = 0; v < joints; ++v) {
          for (int co = 0; co < channels; ++co) {
            const double g = dpre(t, v, co);
            if (g == 0.0) continue;
            for (int ci = 0; ci < channels; ++ci) {
              dK(co, ci, k) += g * block.post_spatial(source, v, ci);
              dpost_spatial(source, v, ci) += g * K(co, ci, k);
            }
          }
        }
      }
    }

    // Spatial convolution backward. The adjacency is symmetric, so the
    // transpose propagation reuses it directly.
    const int c_in = block.propagated.dim(2);
    for (int t = 0; t < frames; ++t) {
      for (int v = 0; v < joints; ++v) {
        for (int ci = 0; ci < c_in; ++ci) {
          const double x = block.propagated(t, v, ci);
          if (x == 0.0) continue;
          for (int co = 0; co < channels; ++co) {
            dW(ci, co) += x * dpost_spatial(t, v, co);
          }
        }
      }
    }
    // dX = A * (dS * W^T); compute the channel mix first, then propagate.
    Tensor dinput({frames, joints, c_in});
    for (int t = 0; t < frames; ++t) {
      for (int v = 0; v < joints; ++v) {
        for (int co = 0; co < channels; ++co) {
          const double g = dpost_spatial(t, v, co);
          if (g == 0.0) continue;
          for (int ci = 0; ci < c_in; ++ci) {
            dinput(t, v, ci) += g * W(ci, co);
          }
        }
      }
    }
    Tensor dprev({frames, joints, c_in});
    for (int t = 0; t < frames; ++t) {
      for (int v = 0; v < joints; ++v) {
        for (int u = 0; u < joints; ++u) {
          const double a = model.adjacency(v, u);
          if (a == 0.0) continue;
          for (int ci = 0; ci < c_in; ++ci) {
            dprev(t, v, ci) += a * dinput(t, u, ci);
          }
        }
      }
    }
    dout = std::move(dprev);
  }
}

}  // namespace

double cross_entropy_backward(const EncoderModel& model,
                              const SkeletonSequence& sequence,
                              EncoderGradients& grads, double scale) {
  const int target = model.seen_index_of(sequence.label_index);
  if (target < 0) {
    throw ContaminationError(
        "encoder training: sample " +
        (sequence.id.empty() ? std::string("<unnamed>") : sequence.id) +
        " has unseen class " + std::to_string(sequence.label_index));
  }
  SampleForward fwd = sample_forward(model, sequence);
  const auto probs = softmax(fwd.logits);
  const double loss =
      -std::log(std::max(probs[static_cast<std::size_t>(target)], 1e-300));

  const int classes = fwd.logits.dim(0);
  const int feature_dim = model.feature_dim();
  Tensor dlogits({classes});
  for (int s = 0; s < classes; ++s) {
    dlogits(s) =
        scale * (probs[static_cast<std::size_t>(s)] - (s == target ? 1.0 : 0.0));
  }
  Tensor dfeature({feature_dim});
  for (int f = 0; f < feature_dim; ++f) {
    const double x = fwd.feature(f);
    for (int s = 0; s < classes; ++s) {
      const double g = dlogits(s);
      grads.classifier_weight(f, s) += x * g;
      dfeature(f) += model.classifier_weight(f, s) * g;
    }
  }
  for (int s = 0; s < classes; ++s) {
    grads.classifier_bias(s) += dlogits(s);
  }

  const double person_scale = 1.0 / static_cast<double>(sequence.persons);
  Tensor dpooled({feature_dim});
  for (int f = 0; f < feature_dim; ++f) {
    dpooled(f) = dfeature(f) * person_scale;
  }
  for (const auto& trace : fwd.persons) {
    person_backward(model, trace, dpooled, grads);
  }
  return loss * scale;
}

double cross_entropy_loss(const EncoderModel& model,
                          const SkeletonSequence& sequence) {
  const int target = model.seen_index_of(sequence.label_index);
  if (target < 0) {
    throw ContaminationError("encoder loss: unseen class " +
                             std::to_string(sequence.label_index));
  }
  SampleForward fwd = sample_forward(model, sequence);
  const auto probs = softmax(fwd.logits);
  return -std::log(std::max(probs[static_cast<std::size_t>(target)], 1e-300));
}

}  // namespace detail

EncoderOutput encoder_forward(const EncoderModel& model,
                              const SkeletonSequence& sequence) {
  detail::SampleForward fwd = detail::sample_forward(model, sequence);
  check_finite(fwd.logits, "encoder logits");
  return EncoderOutput{std::move(fwd.logits), std::move(fwd.feature)};
}

EncoderModel init_encoder(const EncoderConfig& config,
                          const JointTopology& topology,
                          const std::vector<int>& seen_classes, Rng& rng) {
  config.validate();
  topology.validate();
  if (seen_classes.empty()) {
    throw ConfigError("encoder: seen class list must be nonempty");
  }
  std::set<int> unique(seen_classes.begin(), seen_classes.end());
  if (unique.size() != seen_classes.size()) {
    throw ConfigError("encoder: seen class list has duplicates");
  }
  if (config.num_seen_classes != 0 &&
      config.num_seen_classes != static_cast<int>(seen_classes.size())) {
    throw ConfigError("encoder: config declares " +
                      std::to_string(config.num_seen_classes) +
                      " seen classes but " +
                      std::to_string(seen_classes.size()) + " were given");
  }

  EncoderModel model;
  model.config = config;
  model.config.num_seen_classes = static_cast<int>(seen_classes.size());
  model.topology = topology;
  model.adjacency = normalize_adjacency(build_adjacency(topology));
  model.seen_classes = seen_classes;

  // Uniform +-sqrt(6 / (fan_in + fan_out)); draw order is fixed (blocks in
  // order, spatial then temporal, then the classifier) so a seed pins the
  // initialization.
  auto init_uniform = [&rng](Tensor& w, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = rng.uniform(-bound, bound);
    }
  };

  int c_in = config.in_channels;
  for (int c_out : config.block_channels) {
    Tensor w({c_in, c_out});
    init_uniform(w, c_in, c_out);
    model.spatial_weights.push_back(std::move(w));
    Tensor k({c_out, c_out, config.temporal_kernel});
    init_uniform(k, static_cast<double>(c_out) * config.temporal_kernel,
                 static_cast<double>(c_out) * config.temporal_kernel);
    model.temporal_kernels.push_back(std::move(k));
    c_in = c_out;
  }
  const int feature_dim = config.feature_dim();
  const int classes = static_cast<int>(seen_classes.size());
  model.classifier_weight = Tensor({feature_dim, classes});
  init_uniform(model.classifier_weight, feature_dim, classes);
  model.classifier_bias = Tensor({classes});
  return model;
}

EncoderModel train_encoder(const std::vector<SkeletonSequence>& data,
                           const EncoderConfig& config,
                           const JointTopology& topology,
                           const std::vector<int>& seen_classes, Rng& rng) {
  if (data.empty()) {
    throw ConfigError("train_encoder: data must be nonempty");
  }
  EncoderModel model = init_encoder(config, topology, seen_classes, rng);

  // Zero-shot hygiene: refuse before touching any weights.
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto diag = validate_sequence(data[i], topology);
    if (!diag.ok) {
      throw DataError("train_encoder: sample " + std::to_string(i) + ": " +
                      diag.issues.front());
    }
    if (model.seen_index_of(data[i].label_index) < 0) {
      throw ContaminationError(
          "train_encoder: sample " + std::to_string(i) + " (" +
          (data[i].id.empty() ? "<unnamed>" : data[i].id) +
          ") has unseen class " + std::to_string(data[i].label_index));
    }
  }
  if (config.epochs == 0) return model;

  std::vector<SgdState> spatial_states;
  std::vector<SgdState> temporal_states;
  for (std::size_t b = 0; b < model.spatial_weights.size(); ++b) {
    spatial_states.push_back(
        make_sgd_state(config.optimizer, model.spatial_weights[b].dims()));
    temporal_states.push_back(
        make_sgd_state(config.optimizer, model.temporal_kernels[b].dims()));
  }
  SgdState classifier_state =
      make_sgd_state(config.optimizer, model.classifier_weight.dims());
  SgdState bias_state =
      make_sgd_state(config.optimizer, model.classifier_bias.dims());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          begin + static_cast<std::size_t>(config.batch_size), order.size());
      auto grads = detail::zero_gradients(model);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        detail::cross_entropy_backward(model, data[order[i]], grads, scale);
      }
      for (std::size_t b = 0; b < model.spatial_weights.size(); ++b) {
        sgd_step(model.spatial_weights[b], grads.spatial_weights[b],
                 spatial_states[b]);
        sgd_step(model.temporal_kernels[b], grads.temporal_kernels[b],
                 temporal_states[b]);
      }
      sgd_step(model.classifier_weight, grads.classifier_weight,
               classifier_state);
      sgd_step(model.classifier_bias, grads.classifier_bias, bias_state);
    }
  }
  return model;
}

VisualFeatureMatrix extract_features(const EncoderModel& model,
                                     const std::vector<SkeletonSequence>& data,
                                     bool normalize) {
  if (data.empty()) {
    throw ConfigError("extract_features: data must be nonempty");
  }
  VisualFeatureMatrix out;
  const int feature_dim = model.feature_dim();
  out.features = Tensor({static_cast<int>(data.size()), feature_dim});
  out.label_indices.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EncoderOutput forward = encoder_forward(model, data[i]);
    auto row = out.features.row(static_cast<int>(i));
    for (int f = 0; f < feature_dim; ++f) row[f] = forward.feature(f);
    if (normalize) {
      const double norm = l2_norm(row);
      if (norm == 0.0) {
        throw DataError("extract_features: sample " + std::to_string(i) +
                        " produced a zero feature; cannot unit-normalize");
      }
      for (double& x : row) x /= norm;
    }
    out.label_indices.push_back(data[i].label_index);
  }
  out.unit_normalized = normalize;
  out.validate();
  return out;
}

int classify_seen(const EncoderModel& model,
                  const SkeletonSequence& sequence) {
  const EncoderOutput forward = encoder_forward(model, sequence);
  int best = 0;
  for (int s = 1; s < forward.logits.dim(0); ++s) {
    if (forward.logits(s) > forward.logits(best)) best = s;
  }
  return model.seen_classes[static_cast<std::size_t>(best)];
}

void save_encoder(const std::filesystem::path& path,
                  const EncoderModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  nlohmann::json header;
  header["config"] = {
      {"block_channels", model.config.block_channels},
      {"temporal_kernel", model.config.temporal_kernel},
      {"frames", model.config.frames},
      {"in_channels", model.config.in_channels},
      {"num_seen_classes", model.config.num_seen_classes},
      {"epochs", model.config.epochs},
      {"batch_size", model.config.batch_size},
      {"optimizer",
       {{"learning_rate", model.config.optimizer.learning_rate},
        {"momentum", model.config.optimizer.momentum},
        {"weight_decay", model.config.optimizer.weight_decay}}},
  };
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : model.topology.edges) edges.push_back({a, b});
  header["topology"] = {{"joint_count", model.topology.joint_count},
                        {"edges", edges}};
  if (!model.topology.names.empty()) {
    header["topology"]["names"] = model.topology.names;
  }
  header["seen_classes"] = model.seen_classes;

  io::write_magic(out, "ZSTG");
  io::write_u32(out, io::kFormatVersion);
  io::write_header_blob(out, header.dump());
  for (std::size_t b = 0; b < model.spatial_weights.size(); ++b) {
    io::write_f32_tensor(out, model.spatial_weights[b]);
    io::write_f32_tensor(out, model.temporal_kernels[b]);
  }
  io::write_f32_tensor(out, model.classifier_weight);
  io::write_f32_tensor(out, model.classifier_bias);
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

EncoderModel load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  const std::string context = "encoder checkpoint " + path.string();
  io::expect_magic(in, "ZSTG", context);
  const auto version = io::read_u32(in, context);
  if (version != io::kFormatVersion) {
    throw ParseError(context + ": unsupported version " +
                     std::to_string(version));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(io::read_header_blob(in, context));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(context + ": bad header: " + e.what());
  }

  EncoderConfig config;
  JointTopology topology;
  std::vector<int> seen_classes;
  try {
    const auto& c = header.at("config");
    config.block_channels = c.at("block_channels").get<std::vector<int>>();
    config.temporal_kernel = c.at("temporal_kernel").get<int>();
    config.frames = c.at("frames").get<int>();
    config.in_channels = c.at("in_channels").get<int>();
    config.num_seen_classes = c.at("num_seen_classes").get<int>();
    config.epochs = c.at("epochs").get<int>();
    config.batch_size = c.at("batch_size").get<int>();
    const auto& o = c.at("optimizer");
    config.optimizer.learning_rate = o.at("learning_rate").get<double>();
    config.optimizer.momentum = o.at("momentum").get<double>();
    config.optimizer.weight_decay = o.at("weight_decay").get<double>();

    const auto& t = header.at("topology");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : t.at("edges")) {
      edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    std::vector<std::string> names;
    if (t.contains("names")) {
      names = t.at("names").get<std::vector<std::string>>();
    }
    topology = make_topology(t.at("joint_count").get<int>(), std::move(edges),
                             std::move(names));
    seen_classes = header.at("seen_classes").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": bad header: " + e.what());
  }

  EncoderModel model;
  model.config = config;
  model.topology = topology;
  model.adjacency = normalize_adjacency(build_adjacency(topology));
  model.seen_classes = seen_classes;
  int c_in = config.in_channels;
  for (int c_out : config.block_channels) {
    Tensor w({c_in, c_out});
    io::read_f32_tensor(in, w, context);
    Tensor k({c_out, c_out, config.temporal_kernel});
    io::read_f32_tensor(in, k, context);
    model.spatial_weights.push_back(std::move(w));
    model.temporal_kernels.push_back(std::move(k));
    c_in = c_out;
  }
  model.classifier_weight =
      Tensor({config.feature_dim(), static_cast<int>(seen_classes.size())});
  io::read_f32_tensor(in, model.classifier_weight, context);
  model.classifier_bias = Tensor({static_cast<int>(seen_classes.size())});
  io::read_f32_tensor(in, model.classifier_bias, context);
  return model;
}

}  // namespace zsar
