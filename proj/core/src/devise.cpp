#include "zsar/devise.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"
#include "zsar/optim.hpp"

namespace zsar {

std::string to_string(NegativeSet set) {
  return set == NegativeSet::all_classes ? "all_classes" : "seen_only";
}

NegativeSet negative_set_from_string(const std::string& name) {
  if (name == "all_classes") return NegativeSet::all_classes;
  if (name == "seen_only") return NegativeSet::seen_only;
  throw ConfigError("unknown negative set '" + name + "'");
}

void DeviseHyper::validate() const {
  if (margin <= 0) throw ConfigError("devise: margin must be > 0");
  if (learning_rate < 0) throw ConfigError("devise: learning_rate must be >= 0");
  if (momentum < 0 || momentum >= 1) {
    throw ConfigError("devise: momentum must lie in [0, 1)");
  }
  if (batch_size <= 0) throw ConfigError("devise: batch_size must be positive");
  if (epochs < 0) throw ConfigError("devise: epochs must be >= 0");
  if (init_std <= 0) throw ConfigError("devise: init_std must be > 0");
}

namespace {

// Projected feature u = M v, so scores are plain dot products with the
// embedding rows.
Tensor project(const DeviseProjection& projection,
               std::span<const double> feature) {
  const int embedding_dim = projection.embedding_dim();
  const int feature_dim = projection.feature_dim();
  if (static_cast<int>(feature.size()) != feature_dim) {
    throw ShapeError("devise: feature length " +
                     std::to_string(feature.size()) + " does not match M (" +
                     std::to_string(embedding_dim) + " x " +
                     std::to_string(feature_dim) + ")");
  }
  Tensor projected({embedding_dim});
  for (int d = 0; d < embedding_dim; ++d) {
    const auto row = projection.matrix.row(d);
    projected(d) = dot(row, feature);
  }
  return projected;
}

void check_label(const LabelEmbeddingTable& table, int label) {
  if (label < 0 || label >= table.class_count()) {
    throw ConfigError("devise: class index " + std::to_string(label) +
                      " outside table of " +
                      std::to_string(table.class_count()) + " classes");
  }
}

}  // namespace

DeviseLoss hinge_rank_loss(const DeviseProjection& projection,
                           std::span<const double> feature, int label,
                           const LabelEmbeddingTable& table, double margin,
                           const std::vector<int>& negatives) {
  check_label(table, label);
  if (table.dim() != projection.embedding_dim()) {
    throw ShapeError("devise: table dim " + std::to_string(table.dim()) +
                     " does not match projection dim " +
                     std::to_string(projection.embedding_dim()));
  }
  const Tensor projected = project(projection, feature);
  const auto true_row = table.embeddings.row(label);
  const double true_score = dot(true_row, {projected.data(), projected.size()});

  DeviseLoss result;
  result.grad = Tensor::zeros(projection.matrix.dims());
  // Accumulate sum over active terms of (t_j - t_label) before the outer
  // product with v; one rank-1 update then finishes the gradient.
  Tensor direction({projection.embedding_dim()});
  int active = 0;
  for (int j : negatives) {
    check_label(table, j);
    if (j == label) continue;
    const auto neg_row = table.embeddings.row(j);
    const double neg_score = dot(neg_row, {projected.data(), projected.size()});
    const double term = margin - true_score + neg_score;
    if (term > 0.0) {
      result.loss += term;
      ++active;
      for (int d = 0; d < projection.embedding_dim(); ++d) {
        direction(d) += neg_row[static_cast<std::size_t>(d)] -
                        true_row[static_cast<std::size_t>(d)];
      }
    }
  }
  if (active > 0) {
    for (int d = 0; d < projection.embedding_dim(); ++d) {
      const double g = direction(d);
      if (g == 0.0) continue;
      auto grad_row = result.grad.row(d);
      for (int f = 0; f < projection.feature_dim(); ++f) {
        grad_row[static_cast<std::size_t>(f)] = g * feature[static_cast<std::size_t>(f)];
      }
    }
  }
  return result;
}

DeviseProjection train_devise(const VisualFeatureMatrix& features,
                              const LabelEmbeddingTable& table,
                              const std::vector<int>& seen_classes,
                              const DeviseHyper& hyper, Rng& rng) {
  hyper.validate();
  features.validate();
  if (features.count() == 0) {
    throw ConfigError("train_devise: no features");
  }
  std::set<int> seen(seen_classes.begin(), seen_classes.end());
  for (std::size_t i = 0; i < features.label_indices.size(); ++i) {
    const int label = features.label_indices[i];
    check_label(table, label);
    if (!seen.count(label)) {
      throw ContaminationError("train_devise: feature row " +
                               std::to_string(i) + " has unseen class " +
                               std::to_string(label));
    }
  }

  std::vector<int> negatives;
  if (hyper.negative_set == NegativeSet::all_classes) {
    negatives.resize(static_cast<std::size_t>(table.class_count()));
    std::iota(negatives.begin(), negatives.end(), 0);
  } else {
    negatives.assign(seen_classes.begin(), seen_classes.end());
    std::sort(negatives.begin(), negatives.end());
  }

  DeviseProjection projection;
  projection.matrix = Tensor({table.dim(), features.dim()});
  if (hyper.gaussian_init) {
    for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
      projection.matrix[i] = hyper.init_std * rng.normal();
    }
  }

  SgdConfig sgd_config{hyper.learning_rate, hyper.momentum, 0.0};
  SgdState state = make_sgd_state(sgd_config, projection.matrix.dims());

  std::vector<std::size_t> order(static_cast<std::size_t>(features.count()));
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end = std::min(
          begin + static_cast<std::size_t>(hyper.batch_size), order.size());
      Tensor batch_grad = Tensor::zeros(projection.matrix.dims());
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const int row = static_cast<int>(order[i]);
        const DeviseLoss sample = hinge_rank_loss(
            projection, features.features.row(row),
            features.label_indices[static_cast<std::size_t>(row)], table,
            hyper.margin, negatives);
        for (std::size_t g = 0; g < batch_grad.size(); ++g) {
          batch_grad[g] += scale * sample.grad[g];
        }
      }
      sgd_step(projection.matrix, batch_grad, state);
    }
  }
  return projection;
}

std::vector<std::pair<int, double>> predict_devise(
    const DeviseProjection& projection, std::span<const double> feature,
    const std::vector<int>& candidates, const LabelEmbeddingTable& table) {
  if (candidates.empty()) {
    throw ConfigError("predict_devise: candidate list is empty");
  }
  const Tensor projected = project(projection, feature);
  std::vector<std::pair<int, double>> ranked;
  ranked.reserve(candidates.size());
  for (int j : candidates) {
    check_label(table, j);
    ranked.emplace_back(
        j, dot(table.embeddings.row(j), {projected.data(), projected.size()}));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return ranked;
}

void save_devise(const std::filesystem::path& path,
                 const DeviseProjection& projection,
                 const DeviseHyper& hyper) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  nlohmann::json header;
  header["embedding_dim"] = projection.embedding_dim();
  header["feature_dim"] = projection.feature_dim();
  header["hyper"] = {
      {"margin", hyper.margin},
      {"learning_rate", hyper.learning_rate},
      {"momentum", hyper.momentum},
      {"batch_size", hyper.batch_size},
      {"epochs", hyper.epochs},
      {"negative_set", to_string(hyper.negative_set)},
      {"gaussian_init", hyper.gaussian_init},
      {"init_std", hyper.init_std},
  };
  io::write_magic(out, "ZDVS");
  io::write_u32(out, io::kFormatVersion);
  io::write_header_blob(out, header.dump());
  io::write_f32_tensor(out, projection.matrix);
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

std::pair<DeviseProjection, DeviseHyper> load_devise(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  const std::string context = "devise checkpoint " + path.string();
  io::expect_magic(in, "ZDVS", context);
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
  DeviseProjection projection;
  DeviseHyper hyper;
  try {
    const int embedding_dim = header.at("embedding_dim").get<int>();
    const int feature_dim = header.at("feature_dim").get<int>();
    projection.matrix = Tensor({embedding_dim, feature_dim});
    const auto& h = header.at("hyper");
    hyper.margin = h.at("margin").get<double>();
    hyper.learning_rate = h.at("learning_rate").get<double>();
    hyper.momentum = h.at("momentum").get<double>();
    hyper.batch_size = h.at("batch_size").get<int>();
    hyper.epochs = h.at("epochs").get<int>();
    hyper.negative_set =
        negative_set_from_string(h.at("negative_set").get<std::string>());
    hyper.gaussian_init = h.at("gaussian_init").get<bool>();
    hyper.init_std = h.at("init_std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": bad header: " + e.what());
  }
  io::read_f32_tensor(in, projection.matrix, context);
  return {std::move(projection), hyper};
}

}  // namespace zsar
