#include "zsar/relation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"
#include "zsar/optim.hpp"

namespace zsar {

std::string to_string(CandidateSet set) {
  return set == CandidateSet::all_classes ? "all_classes" : "seen_only";
}

CandidateSet candidate_set_from_string(const std::string& name) {
  if (name == "all_classes") return CandidateSet::all_classes;
  if (name == "seen_only") return CandidateSet::seen_only;
  throw ConfigError("unknown candidate set '" + name + "'");
}

void RelationHyper::validate() const {
  if (episodes < 0) throw ConfigError("relation: episodes must be >= 0");
  if (batch_size <= 0) throw ConfigError("relation: batch_size must be positive");
  if (learning_rate < 0) {
    throw ConfigError("relation: learning_rate must be >= 0");
  }
  if (lr_step_size <= 0) {
    throw ConfigError("relation: lr_step_size must be positive");
  }
  if (lr_gamma <= 0 || lr_gamma > 1) {
    throw ConfigError("relation: lr_gamma must lie in (0, 1]");
  }
  if (hidden_attr < 0 || hidden_rel < 0) {
    throw ConfigError("relation: hidden widths must be >= 0");
  }
  if (init_std <= 0) throw ConfigError("relation: init_std must be > 0");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = x^T W + b
void affine(std::span<const double> x, const Tensor& w, const Tensor& b,
            std::span<double> y) {
  const int in = w.dim(0);
  const int out = w.dim(1);
  for (int o = 0; o < out; ++o) y[static_cast<std::size_t>(o)] = b(o);
  for (int i = 0; i < in; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    for (int o = 0; o < out; ++o) {
      y[static_cast<std::size_t>(o)] += xi * w(i, o);
    }
  }
}

struct AttrTrace {
  std::vector<double> hidden_pre;  // [H_a]
  std::vector<double> hidden;      // [H_a]
  std::vector<double> output;      // [F]
};

AttrTrace attr_forward(const AttributeNet& attr,
                       std::span<const double> embedding) {
  if (static_cast<int>(embedding.size()) != attr.w1.dim(0)) {
    throw ShapeError("relation: embedding dim " +
                     std::to_string(embedding.size()) +
                     " does not match attribute net input " +
                     std::to_string(attr.w1.dim(0)));
  }
  AttrTrace trace;
  trace.hidden_pre.resize(static_cast<std::size_t>(attr.w1.dim(1)));
  affine(embedding, attr.w1, attr.b1, trace.hidden_pre);
  trace.hidden = trace.hidden_pre;
  for (double& h : trace.hidden) h = std::max(0.0, h);
  trace.output.resize(static_cast<std::size_t>(attr.w2.dim(1)));
  affine(trace.hidden, attr.w2, attr.b2, trace.output);
  return trace;
}

struct RelTrace {
  std::vector<double> concat;      // [2F]
  std::vector<double> hidden_pre;  // [H_r]
  std::vector<double> hidden;      // [H_r]
  double pre_sigmoid = 0.0;
  double score = 0.5;
};

RelTrace rel_forward(const RelationNet& rel, std::span<const double> projected,
                     std::span<const double> feature) {
  if (static_cast<int>(projected.size() + feature.size()) != rel.w1.dim(0)) {
    throw ShapeError("relation: concat width " +
                     std::to_string(projected.size() + feature.size()) +
                     " does not match relation net input " +
                     std::to_string(rel.w1.dim(0)));
  }
  RelTrace trace;
  trace.concat.reserve(projected.size() + feature.size());
  trace.concat.assign(projected.begin(), projected.end());
  trace.concat.insert(trace.concat.end(), feature.begin(), feature.end());
  trace.hidden_pre.resize(static_cast<std::size_t>(rel.w1.dim(1)));
  affine(trace.concat, rel.w1, rel.b1, trace.hidden_pre);
  trace.hidden = trace.hidden_pre;
  for (double& h : trace.hidden) h = std::max(0.0, h);
  double out[1];
  affine(trace.hidden, rel.w2, rel.b2, out);
  trace.pre_sigmoid = out[0];
  trace.score = sigmoid(out[0]);
  return trace;
}

RelationGradients zero_gradients(const AttributeNet& attr,
                                 const RelationNet& rel) {
  RelationGradients grads;
  grads.attr.w1 = Tensor::zeros(attr.w1.dims());
  grads.attr.b1 = Tensor::zeros(attr.b1.dims());
  grads.attr.w2 = Tensor::zeros(attr.w2.dims());
  grads.attr.b2 = Tensor::zeros(attr.b2.dims());
  grads.rel.w1 = Tensor::zeros(rel.w1.dims());
  grads.rel.b1 = Tensor::zeros(rel.b1.dims());
  grads.rel.w2 = Tensor::zeros(rel.w2.dims());
  grads.rel.b2 = Tensor::zeros(rel.b2.dims());
  return grads;
}

void check_episode(const Episode& episode) {
  if (episode.features.rank() != 2) {
    throw ShapeError("episode: features must be rank 2");
  }
  const int batch = episode.features.dim(0);
  const int candidates = static_cast<int>(episode.candidates.size());
  if (static_cast<int>(episode.labels.size()) != batch) {
    throw ShapeError("episode: label count does not match batch");
  }
  if (episode.targets.rank() != 2 || episode.targets.dim(0) != batch ||
      episode.targets.dim(1) != candidates) {
    throw ShapeError("episode: target matrix must be [batch, candidates]");
  }
  for (std::size_t i = 0; i < episode.targets.size(); ++i) {
    if (episode.targets[i] != 0.0 && episode.targets[i] != 1.0) {
      throw DataError("episode: targets must be 0 or 1");
    }
  }
}

}  // namespace

double relation_score(const AttributeNet& attr, const RelationNet& rel,
                      std::span<const double> embedding,
                      std::span<const double> feature) {
  const AttrTrace projected = attr_forward(attr, embedding);
  return rel_forward(rel, projected.output, feature).score;
}

Episode sample_episode(const VisualFeatureMatrix& features,
                       const LabelEmbeddingTable& table,
                       const std::vector<int>& candidates, int batch_size,
                       Rng& rng) {
  if (features.count() == 0) {
    throw ConfigError("sample_episode: no features to sample from");
  }
  if (candidates.empty()) {
    throw ConfigError("sample_episode: candidate list is empty");
  }
  if (batch_size <= 0) {
    throw ConfigError("sample_episode: batch_size must be positive");
  }
  for (int c : candidates) {
    if (c < 0 || c >= table.class_count()) {
      throw ConfigError("sample_episode: candidate " + std::to_string(c) +
                        " outside the table");
    }
  }
  Episode episode;
  episode.candidates = candidates;
  episode.features = Tensor({batch_size, features.dim()});
  episode.targets =
      Tensor({batch_size, static_cast<int>(candidates.size())});
  episode.labels.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const auto pick = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(features.count())));
    const auto src = features.features.row(pick);
    auto dst = episode.features.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    const int label = features.label_indices[static_cast<std::size_t>(pick)];
    episode.labels.push_back(label);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      episode.targets(i, static_cast<int>(j)) =
          candidates[j] == label ? 1.0 : 0.0;
    }
  }
  return episode;
}

EpisodeLoss episode_loss(const AttributeNet& attr, const RelationNet& rel,
                         const LabelEmbeddingTable& table,
                         const Episode& episode) {
  check_episode(episode);
  const int batch = episode.features.dim(0);
  const int candidate_count = static_cast<int>(episode.candidates.size());
  const int feature_dim = episode.features.dim(1);
  const int hidden_attr = attr.w1.dim(1);

  EpisodeLoss result;
  result.grads = zero_gradients(attr, rel);

  // Each candidate's projection is shared across the batch; cache the
  // forward trace and accumulate its upstream gradient.
  std::vector<AttrTrace> attr_traces;
  attr_traces.reserve(static_cast<std::size_t>(candidate_count));
  for (int j = 0; j < candidate_count; ++j) {
    attr_traces.push_back(
        attr_forward(attr, table.embeddings.row(episode.candidates[j])));
  }
  std::vector<std::vector<double>> dprojected(
      static_cast<std::size_t>(candidate_count),
      std::vector<double>(static_cast<std::size_t>(feature_dim), 0.0));

  const double pair_scale = 1.0 / (static_cast<double>(batch) * candidate_count);
  const int hidden_rel = rel.w1.dim(1);

  for (int i = 0; i < batch; ++i) {
    const auto feature = episode.features.row(i);
    for (int j = 0; j < candidate_count; ++j) {
      const AttrTrace& projected = attr_traces[static_cast<std::size_t>(j)];
      const RelTrace trace = rel_forward(rel, projected.output, feature);
      const double target = episode.targets(i, j);
      const double diff = trace.score - target;
      result.loss += pair_scale * diff * diff;

      // d(loss)/d(pre_sigmoid)
      const double dout =
          2.0 * pair_scale * diff * trace.score * (1.0 - trace.score);
      for (int h = 0; h < hidden_rel; ++h) {
        result.grads.rel.w2(h, 0) +=
            trace.hidden[static_cast<std::size_t>(h)] * dout;
      }
      result.grads.rel.b2(0) += dout;

      for (int h = 0; h < hidden_rel; ++h) {
        if (trace.hidden_pre[static_cast<std::size_t>(h)] <= 0.0) continue;
        const double dh = rel.w2(h, 0) * dout;
        result.grads.rel.b1(h) += dh;
        for (int z = 0; z < rel.w1.dim(0); ++z) {
          result.grads.rel.w1(z, h) +=
              trace.concat[static_cast<std::size_t>(z)] * dh;
        }
        // Split the concat gradient: the first F entries flow back into
        // the attribute net, the rest belong to the (fixed) feature.
        for (int z = 0; z < feature_dim; ++z) {
          dprojected[static_cast<std::size_t>(j)][static_cast<std::size_t>(z)] +=
              rel.w1(z, h) * dh;
        }
      }
    }
  }

  for (int j = 0; j < candidate_count; ++j) {
    const AttrTrace& trace = attr_traces[static_cast<std::size_t>(j)];
    const auto& da = dprojected[static_cast<std::size_t>(j)];
    const auto embedding = table.embeddings.row(episode.candidates[j]);
    for (int f = 0; f < feature_dim; ++f) {
      const double g = da[static_cast<std::size_t>(f)];
      if (g == 0.0) continue;
      result.grads.attr.b2(f) += g;
      for (int h = 0; h < hidden_attr; ++h) {
        result.grads.attr.w2(h, f) +=
            trace.hidden[static_cast<std::size_t>(h)] * g;
      }
    }
    for (int h = 0; h < hidden_attr; ++h) {
      if (trace.hidden_pre[static_cast<std::size_t>(h)] <= 0.0) continue;
      double dh = 0.0;
      for (int f = 0; f < feature_dim; ++f) {
        dh += attr.w2(h, f) * da[static_cast<std::size_t>(f)];
      }
      if (dh == 0.0) continue;
      result.grads.attr.b1(h) += dh;
      for (int d = 0; d < attr.w1.dim(0); ++d) {
        result.grads.attr.w1(d, h) +=
            embedding[static_cast<std::size_t>(d)] * dh;
      }
    }
  }
  return result;
}

AttributeNet init_attribute_net(int embedding_dim, int hidden, int feature_dim,
                                double init_std, Rng& rng) {
  if (embedding_dim <= 0 || hidden <= 0 || feature_dim <= 0) {
    throw ConfigError("attribute net: dims must be positive");
  }
  AttributeNet attr;
  attr.w1 = Tensor({embedding_dim, hidden});
  for (std::size_t i = 0; i < attr.w1.size(); ++i) {
    attr.w1[i] = init_std * rng.normal();
  }
  attr.b1 = Tensor({hidden});
  attr.w2 = Tensor({hidden, feature_dim});
  for (std::size_t i = 0; i < attr.w2.size(); ++i) {
    attr.w2[i] = init_std * rng.normal();
  }
  attr.b2 = Tensor({feature_dim});
  return attr;
}

RelationNet init_relation_net(int feature_dim, int hidden, double init_std,
                              Rng& rng) {
  if (feature_dim <= 0 || hidden <= 0) {
    throw ConfigError("relation net: dims must be positive");
  }
  RelationNet rel;
  rel.w1 = Tensor({2 * feature_dim, hidden});
  for (std::size_t i = 0; i < rel.w1.size(); ++i) {
    rel.w1[i] = init_std * rng.normal();
  }
  rel.b1 = Tensor({hidden});
  rel.w2 = Tensor({hidden, 1});
  for (std::size_t i = 0; i < rel.w2.size(); ++i) {
    rel.w2[i] = init_std * rng.normal();
  }
  rel.b2 = Tensor({1});
  return rel;
}

RelationModel train_relation(const VisualFeatureMatrix& features,
                             const LabelEmbeddingTable& table,
                             const std::vector<int>& seen_classes,
                             const RelationHyper& hyper, Rng& rng) {
  hyper.validate();
  features.validate();
  if (features.count() == 0) {
    throw ConfigError("train_relation: no features");
  }
  std::set<int> seen(seen_classes.begin(), seen_classes.end());
  for (std::size_t i = 0; i < features.label_indices.size(); ++i) {
    const int label = features.label_indices[i];
    if (label < 0 || label >= table.class_count()) {
      throw ConfigError("train_relation: feature row " + std::to_string(i) +
                        " has class " + std::to_string(label) +
                        " outside the table");
    }
    if (!seen.count(label)) {
      throw ContaminationError("train_relation: feature row " +
                               std::to_string(i) + " has unseen class " +
                               std::to_string(label));
    }
  }

  std::vector<int> candidates;
  if (hyper.candidate_set == CandidateSet::all_classes) {
    candidates.resize(static_cast<std::size_t>(table.class_count()));
    std::iota(candidates.begin(), candidates.end(), 0);
  } else {
    candidates.assign(seen_classes.begin(), seen_classes.end());
    std::sort(candidates.begin(), candidates.end());
  }

  const int embedding_dim = table.dim();
  const int feature_dim = features.dim();
  const int hidden_attr =
      hyper.hidden_attr > 0 ? hyper.hidden_attr : 2 * embedding_dim;
  const int hidden_rel = hyper.hidden_rel > 0 ? hyper.hidden_rel : feature_dim;

  RelationModel model;
  model.attr = init_attribute_net(embedding_dim, hidden_attr, feature_dim,
                                  hyper.init_std, rng);
  model.rel = init_relation_net(feature_dim, hidden_rel, hyper.init_std, rng);
  if (hyper.episodes == 0) return model;

  AdamConfig adam{hyper.learning_rate, 0.9, 0.999, 1e-8, hyper.lr_step_size,
                  hyper.lr_gamma};
  Tensor* params[8] = {&model.attr.w1, &model.attr.b1, &model.attr.w2,
                       &model.attr.b2, &model.rel.w1,  &model.rel.b1,
                       &model.rel.w2,  &model.rel.b2};
  std::vector<AdamState> states;
  states.reserve(8);
  for (Tensor* p : params) {
    states.push_back(make_adam_state(adam, p->dims()));
  }

  model.episode_losses.reserve(static_cast<std::size_t>(hyper.episodes));
  for (int e = 0; e < hyper.episodes; ++e) {
    const Episode episode =
        sample_episode(features, table, candidates, hyper.batch_size, rng);
    EpisodeLoss step = episode_loss(model.attr, model.rel, table, episode);
    model.episode_losses.push_back(step.loss);
    const Tensor* grads[8] = {&step.grads.attr.w1, &step.grads.attr.b1,
                              &step.grads.attr.w2, &step.grads.attr.b2,
                              &step.grads.rel.w1,  &step.grads.rel.b1,
                              &step.grads.rel.w2,  &step.grads.rel.b2};
    for (int p = 0; p < 8; ++p) {
      adam_step(*params[p], *grads[p], states[static_cast<std::size_t>(p)]);
    }
  }
  return model;
}

std::vector<std::pair<int, double>> predict_relation(
    const AttributeNet& attr, const RelationNet& rel,
    std::span<const double> feature, const std::vector<int>& candidates,
    const LabelEmbeddingTable& table) {
  if (candidates.empty()) {
    throw ConfigError("predict_relation: candidate list is empty");
  }
  std::vector<std::pair<int, double>> ranked;
  ranked.reserve(candidates.size());
  for (int j : candidates) {
    if (j < 0 || j >= table.class_count()) {
      throw ConfigError("predict_relation: candidate " + std::to_string(j) +
                        " outside the table");
    }
    ranked.emplace_back(
        j, relation_score(attr, rel, table.embeddings.row(j), feature));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return ranked;
}

void save_relation(const std::filesystem::path& path, const AttributeNet& attr,
                   const RelationNet& rel, const RelationHyper& hyper) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  nlohmann::json header;
  header["embedding_dim"] = attr.w1.dim(0);
  header["hidden_attr"] = attr.w1.dim(1);
  header["feature_dim"] = attr.w2.dim(1);
  header["hidden_rel"] = rel.w1.dim(1);
  header["hyper"] = {
      {"episodes", hyper.episodes},
      {"batch_size", hyper.batch_size},
      {"learning_rate", hyper.learning_rate},
      {"lr_step_size", hyper.lr_step_size},
      {"lr_gamma", hyper.lr_gamma},
      {"hidden_attr", hyper.hidden_attr},
      {"hidden_rel", hyper.hidden_rel},
      {"candidate_set", to_string(hyper.candidate_set)},
      {"init_std", hyper.init_std},
  };
  io::write_magic(out, "ZREL");
  io::write_u32(out, io::kFormatVersion);
  io::write_header_blob(out, header.dump());
  for (const Tensor* t : {&attr.w1, &attr.b1, &attr.w2, &attr.b2, &rel.w1,
                          &rel.b1, &rel.w2, &rel.b2}) {
    io::write_f32_tensor(out, *t);
  }
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

LoadedRelation load_relation(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  const std::string context = "relation checkpoint " + path.string();
  io::expect_magic(in, "ZREL", context);
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
  LoadedRelation loaded;
  try {
    const int embedding_dim = header.at("embedding_dim").get<int>();
    const int hidden_attr = header.at("hidden_attr").get<int>();
    const int feature_dim = header.at("feature_dim").get<int>();
    const int hidden_rel = header.at("hidden_rel").get<int>();
    loaded.attr.w1 = Tensor({embedding_dim, hidden_attr});
    loaded.attr.b1 = Tensor({hidden_attr});
    loaded.attr.w2 = Tensor({hidden_attr, feature_dim});
    loaded.attr.b2 = Tensor({feature_dim});
    loaded.rel.w1 = Tensor({2 * feature_dim, hidden_rel});
    loaded.rel.b1 = Tensor({hidden_rel});
    loaded.rel.w2 = Tensor({hidden_rel, 1});
    loaded.rel.b2 = Tensor({1});
    const auto& h = header.at("hyper");
    loaded.hyper.episodes = h.at("episodes").get<int>();
    loaded.hyper.batch_size = h.at("batch_size").get<int>();
    loaded.hyper.learning_rate = h.at("learning_rate").get<double>();
    loaded.hyper.lr_step_size = h.at("lr_step_size").get<std::int64_t>();
    loaded.hyper.lr_gamma = h.at("lr_gamma").get<double>();
    loaded.hyper.hidden_attr = h.at("hidden_attr").get<int>();
    loaded.hyper.hidden_rel = h.at("hidden_rel").get<int>();
    loaded.hyper.candidate_set =
        candidate_set_from_string(h.at("candidate_set").get<std::string>());
    loaded.hyper.init_std = h.at("init_std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": bad header: " + e.what());
  }
  for (Tensor* t : {&loaded.attr.w1, &loaded.attr.b1, &loaded.attr.w2,
                    &loaded.attr.b2, &loaded.rel.w1, &loaded.rel.b1,
                    &loaded.rel.w2, &loaded.rel.b2}) {
    io::read_f32_tensor(in, *t, context);
  }
  return loaded;
}

namespace detail {

double episode_min_abs_pre_relu(const AttributeNet& attr,
                                const RelationNet& rel,
                                const LabelEmbeddingTable& table,
                                const Episode& episode) {
  double smallest = std::numeric_limits<double>::infinity();
  std::vector<AttrTrace> traces;
  for (int j : episode.candidates) {
    traces.push_back(attr_forward(attr, table.embeddings.row(j)));
    for (double h : traces.back().hidden_pre) {
      smallest = std::min(smallest, std::abs(h));
    }
  }
  for (int i = 0; i < episode.features.dim(0); ++i) {
    const auto feature = episode.features.row(i);
    for (std::size_t j = 0; j < episode.candidates.size(); ++j) {
      const RelTrace trace = rel_forward(rel, traces[j].output, feature);
      for (double h : trace.hidden_pre) {
        smallest = std::min(smallest, std::abs(h));
      }
    }
  }
  return smallest;
}

}  // namespace detail

}  // namespace zsar
