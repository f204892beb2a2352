#include "zsar/pipeline.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

namespace {

using nlohmann::json;

void check_keys(const json& object, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&key](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + context);
    }
  }
}

template <typename T>
void maybe(const json& object, const char* key, T& target) {
  if (object.contains(key)) {
    try {
      target = object.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + std::string(key) +
                        "': " + e.what());
    }
  }
}

SyntheticSpec synthetic_from_json(const json& object) {
  check_keys(object,
             {"class_count", "samples_per_class", "frames", "joints",
              "persons", "group_size", "grouped_count", "pose_scale",
              "amplitude_scale", "frequency_min", "frequency_max",
              "within_group_jitter", "noise_scale", "embedding_dim",
              "correlated_embeddings"},
             "dataset.synthetic");
  SyntheticSpec spec;
  maybe(object, "class_count", spec.class_count);
  maybe(object, "samples_per_class", spec.samples_per_class);
  maybe(object, "frames", spec.frames);
  maybe(object, "joints", spec.joints);
  maybe(object, "persons", spec.persons);
  maybe(object, "group_size", spec.group_size);
  maybe(object, "grouped_count", spec.grouped_count);
  maybe(object, "pose_scale", spec.pose_scale);
  maybe(object, "amplitude_scale", spec.amplitude_scale);
  maybe(object, "frequency_min", spec.frequency_min);
  maybe(object, "frequency_max", spec.frequency_max);
  maybe(object, "within_group_jitter", spec.within_group_jitter);
  maybe(object, "noise_scale", spec.noise_scale);
  maybe(object, "embedding_dim", spec.embedding_dim);
  maybe(object, "correlated_embeddings", spec.correlated_embeddings);
  return spec;
}

json synthetic_to_json(const SyntheticSpec& spec) {
  return json{{"class_count", spec.class_count},
              {"samples_per_class", spec.samples_per_class},
              {"frames", spec.frames},
              {"joints", spec.joints},
              {"persons", spec.persons},
              {"group_size", spec.group_size},
              {"grouped_count", spec.grouped_count},
              {"pose_scale", spec.pose_scale},
              {"amplitude_scale", spec.amplitude_scale},
              {"frequency_min", spec.frequency_min},
              {"frequency_max", spec.frequency_max},
              {"within_group_jitter", spec.within_group_jitter},
              {"noise_scale", spec.noise_scale},
              {"embedding_dim", spec.embedding_dim},
              {"correlated_embeddings", spec.correlated_embeddings}};
}

EncoderConfig encoder_from_json(const json& object) {
  check_keys(object,
             {"block_channels", "temporal_kernel", "frames", "epochs",
              "batch_size", "optimizer"},
             "encoder");
  EncoderConfig config;
  maybe(object, "block_channels", config.block_channels);
  maybe(object, "temporal_kernel", config.temporal_kernel);
  maybe(object, "frames", config.frames);
  maybe(object, "epochs", config.epochs);
  maybe(object, "batch_size", config.batch_size);
  if (object.contains("optimizer")) {
    const auto& opt = object.at("optimizer");
    check_keys(opt, {"learning_rate", "momentum", "weight_decay"},
               "encoder.optimizer");
    maybe(opt, "learning_rate", config.optimizer.learning_rate);
    maybe(opt, "momentum", config.optimizer.momentum);
    maybe(opt, "weight_decay", config.optimizer.weight_decay);
  }
  return config;
}

json encoder_to_json(const EncoderConfig& config) {
  return json{{"block_channels", config.block_channels},
              {"temporal_kernel", config.temporal_kernel},
              {"frames", config.frames},
              {"epochs", config.epochs},
              {"batch_size", config.batch_size},
              {"optimizer",
               {{"learning_rate", config.optimizer.learning_rate},
                {"momentum", config.optimizer.momentum},
                {"weight_decay", config.optimizer.weight_decay}}}};
}

DeviseHyper devise_from_json(const json& object) {
  check_keys(object,
             {"margin", "learning_rate", "momentum", "batch_size", "epochs",
              "negative_set", "gaussian_init", "init_std"},
             "devise");
  DeviseHyper hyper;
  maybe(object, "margin", hyper.margin);
  maybe(object, "learning_rate", hyper.learning_rate);
  maybe(object, "momentum", hyper.momentum);
  maybe(object, "batch_size", hyper.batch_size);
  maybe(object, "epochs", hyper.epochs);
  if (object.contains("negative_set")) {
    hyper.negative_set =
        negative_set_from_string(object.at("negative_set").get<std::string>());
  }
  maybe(object, "gaussian_init", hyper.gaussian_init);
  maybe(object, "init_std", hyper.init_std);
  return hyper;
}

json devise_to_json(const DeviseHyper& hyper) {
  return json{{"margin", hyper.margin},
              {"learning_rate", hyper.learning_rate},
              {"momentum", hyper.momentum},
              {"batch_size", hyper.batch_size},
              {"epochs", hyper.epochs},
              {"negative_set", to_string(hyper.negative_set)},
              {"gaussian_init", hyper.gaussian_init},
              {"init_std", hyper.init_std}};
}

RelationHyper relation_from_json(const json& object) {
  check_keys(object,
             {"episodes", "batch_size", "learning_rate", "lr_step_size",
              "lr_gamma", "hidden_attr", "hidden_rel", "candidate_set",
              "init_std"},
             "relation");
  RelationHyper hyper;
  maybe(object, "episodes", hyper.episodes);
  maybe(object, "batch_size", hyper.batch_size);
  maybe(object, "learning_rate", hyper.learning_rate);
  maybe(object, "lr_step_size", hyper.lr_step_size);
  maybe(object, "lr_gamma", hyper.lr_gamma);
  maybe(object, "hidden_attr", hyper.hidden_attr);
  maybe(object, "hidden_rel", hyper.hidden_rel);
  if (object.contains("candidate_set")) {
    hyper.candidate_set = candidate_set_from_string(
        object.at("candidate_set").get<std::string>());
  }
  maybe(object, "init_std", hyper.init_std);
  return hyper;
}

json relation_to_json(const RelationHyper& hyper) {
  return json{{"episodes", hyper.episodes},
              {"batch_size", hyper.batch_size},
              {"learning_rate", hyper.learning_rate},
              {"lr_step_size", hyper.lr_step_size},
              {"lr_gamma", hyper.lr_gamma},
              {"hidden_attr", hyper.hidden_attr},
              {"hidden_rel", hyper.hidden_rel},
              {"candidate_set", to_string(hyper.candidate_set)},
              {"init_std", hyper.init_std}};
}

std::string isolation_to_string(IsolationKind kind) {
  return kind == IsolationKind::nearest_neighbor ? "nearest_neighbor"
                                                 : "mean_distance";
}

IsolationKind isolation_from_string(const std::string& name) {
  if (name == "nearest_neighbor") return IsolationKind::nearest_neighbor;
  if (name == "mean_distance") return IsolationKind::mean_distance;
  throw ConfigError("unknown isolation score kind '" + name + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == !dataset_dir.empty()) {
    throw ConfigError(
        "config: exactly one of dataset.path and dataset.synthetic must be "
        "set");
  }
  if (synthetic) synthetic->validate();
  if (!dataset_dir.empty() && !std::filesystem::exists(dataset_dir)) {
    throw ConfigError("config: dataset path does not exist: " + dataset_dir);
  }
  encoder.validate();
  if (embeddings.source != "file" && embeddings.source != "random") {
    throw ConfigError("config: embeddings.source must be 'file' or 'random'");
  }
  if (embeddings.source == "file" && !embeddings.path.empty() &&
      !std::filesystem::exists(embeddings.path)) {
    throw ConfigError("config: embeddings path does not exist: " +
                      embeddings.path);
  }
  if (embeddings.source == "random" && embeddings.dim < 0) {
    throw ConfigError("config: embeddings.dim must be >= 0");
  }
  if (split.unseen_count <= 0) {
    throw ConfigError("config: split.unseen_count must be positive");
  }
  if (split.diversity_floor < 0) {
    throw ConfigError("config: split.diversity_floor must be >= 0");
  }
  devise.validate();
  relation.validate();
  if (eval_ks.empty()) {
    throw ConfigError("config: evaluation.ks must be nonempty");
  }
  for (int k : eval_ks) {
    if (k < 1) throw ConfigError("config: evaluation ks must be >= 1");
  }
  if (!run_devise && !run_relation) {
    throw ConfigError("config: at least one head must be enabled");
  }
}

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(doc,
             {"master_seed", "dataset", "encoder", "embeddings", "split",
              "devise", "relation", "heads", "evaluation"},
             "top level");
  ExperimentConfig config;
  maybe(doc, "master_seed", config.master_seed);
  if (doc.contains("dataset")) {
    const auto& dataset = doc.at("dataset");
    check_keys(dataset, {"path", "synthetic"}, "dataset");
    if (dataset.contains("path")) {
      config.dataset_dir = dataset.at("path").get<std::string>();
    }
    if (dataset.contains("synthetic")) {
      config.synthetic = synthetic_from_json(dataset.at("synthetic"));
    }
  }
  if (doc.contains("encoder")) {
    config.encoder = encoder_from_json(doc.at("encoder"));
  }
  if (doc.contains("embeddings")) {
    const auto& emb = doc.at("embeddings");
    check_keys(emb, {"source", "path", "dim"}, "embeddings");
    maybe(emb, "source", config.embeddings.source);
    maybe(emb, "path", config.embeddings.path);
    maybe(emb, "dim", config.embeddings.dim);
  }
  if (doc.contains("split")) {
    const auto& split = doc.at("split");
    check_keys(split,
               {"strategy", "unseen_count", "metric", "diversity_floor",
                "isolation"},
               "split");
    if (split.contains("strategy")) {
      config.split.strategy =
          split_strategy_from_string(split.at("strategy").get<std::string>());
    }
    maybe(split, "unseen_count", config.split.unseen_count);
    if (split.contains("metric")) {
      config.split.metric =
          distance_metric_from_string(split.at("metric").get<std::string>());
    }
    maybe(split, "diversity_floor", config.split.diversity_floor);
    if (split.contains("isolation")) {
      config.split.isolation =
          isolation_from_string(split.at("isolation").get<std::string>());
    }
  }
  if (doc.contains("devise")) {
    config.devise = devise_from_json(doc.at("devise"));
  }
  if (doc.contains("relation")) {
    config.relation = relation_from_json(doc.at("relation"));
  }
  if (doc.contains("heads")) {
    config.run_devise = false;
    config.run_relation = false;
    for (const auto& head : doc.at("heads")) {
      const std::string name = head.get<std::string>();
      if (name == "devise") config.run_devise = true;
      else if (name == "relation") config.run_relation = true;
      else throw ConfigError("config: unknown head '" + name + "'");
    }
  }
  if (doc.contains("evaluation")) {
    const auto& eval = doc.at("evaluation");
    check_keys(eval, {"ks"}, "evaluation");
    maybe(eval, "ks", config.eval_ks);
  }
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(io::read_text_file(path));
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["master_seed"] = config.master_seed;
  if (config.synthetic) {
    doc["dataset"] = {{"synthetic", synthetic_to_json(*config.synthetic)}};
  } else {
    doc["dataset"] = {{"path", config.dataset_dir}};
  }
  doc["encoder"] = encoder_to_json(config.encoder);
  doc["embeddings"] = {{"source", config.embeddings.source},
                       {"path", config.embeddings.path},
                       {"dim", config.embeddings.dim}};
  doc["split"] = {{"strategy", to_string(config.split.strategy)},
                  {"unseen_count", config.split.unseen_count},
                  {"metric", to_string(config.split.metric)},
                  {"diversity_floor", config.split.diversity_floor},
                  {"isolation", isolation_to_string(config.split.isolation)}};
  doc["devise"] = devise_to_json(config.devise);
  doc["relation"] = relation_to_json(config.relation);
  std::vector<std::string> heads;
  if (config.run_devise) heads.push_back("devise");
  if (config.run_relation) heads.push_back("relation");
  doc["heads"] = heads;
  doc["evaluation"] = {{"ks", config.eval_ks}};
  return doc.dump(2);
}

namespace {

// Wraps stage failures so the abort names the stage and keeps the exit
// code of the underlying error.
template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  }
}

std::vector<SkeletonSequence> filter_by_classes(
    std::vector<SkeletonSequence> samples, const std::vector<int>& keep) {
  std::set<int> wanted(keep.begin(), keep.end());
  std::vector<SkeletonSequence> out;
  for (auto& sample : samples) {
    if (wanted.count(sample.label_index)) {
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir, bool force) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "reports", ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir.string() + ": " +
                  ec.message());
  }

  PipelineResult result;
  auto note = [&result](const std::string& stage, bool reused) {
    result.stages.emplace_back(stage, reused ? "reused" : "computed");
  };
  const std::string config_echo = experiment_config_to_json(config);

  // --- dataset ---------------------------------------------------------
  DatasetManifest manifest;
  if (config.synthetic) {
    result.dataset_dir = out_dir / "dataset";
    const bool reuse =
        !force && std::filesystem::exists(result.dataset_dir / "manifest.json");
    manifest = run_stage(kStageGenerate, [&] {
      if (reuse) return load_manifest(result.dataset_dir);
      Rng rng(Rng::derive_seed(config.master_seed, kStageGenerate));
      return generate_synthetic_dataset(*config.synthetic, rng,
                                        result.dataset_dir);
    });
    note(kStageGenerate, reuse);
  } else {
    result.dataset_dir = config.dataset_dir;
    manifest = run_stage("dataset", [&] { return load_manifest(result.dataset_dir); });
    note("dataset", true);
  }
  const JointTopology topology = load_dataset_topology(result.dataset_dir, manifest);

  // Canonical table: the dataset's own embeddings, used for split
  // construction. Distances are computed on unit-normalized rows.
  const LabelEmbeddingTable canonical = normalize_table(load_embeddings(
      result.dataset_dir / manifest.embeddings_file, manifest.classes));

  // --- active embedding table -----------------------------------------
  LabelEmbeddingTable active;
  std::string embedding_source_name;
  if (config.embeddings.source == "random") {
    embedding_source_name = "random";
    const auto random_file = out_dir / "embeddings_random.csv";
    const bool reuse = !force && std::filesystem::exists(random_file);
    active = run_stage(kStageRandomEmbeddings, [&] {
      if (!reuse) {
        Rng rng(Rng::derive_seed(config.master_seed, kStageRandomEmbeddings));
        const int dim =
            config.embeddings.dim > 0 ? config.embeddings.dim : canonical.dim();
        save_embeddings(random_file,
                        random_embeddings(manifest.classes, dim, rng));
      }
      return load_embeddings(random_file, manifest.classes);
    });
    note(kStageRandomEmbeddings, reuse);
  } else {
    embedding_source_name = "loaded";
    active = run_stage("embeddings", [&] {
      if (config.embeddings.path.empty()) {
        return load_embeddings(result.dataset_dir / manifest.embeddings_file,
                               manifest.classes);
      }
      return load_embeddings(config.embeddings.path, manifest.classes);
    });
    note("embeddings", true);
  }
  active = normalize_table(active);

  // --- split ------------------------------------------------------------
  result.split_file = out_dir / "split.json";
  const bool split_reused = !force && std::filesystem::exists(result.split_file);
  ClassSplit split = run_stage(kStageSplit, [&] {
    if (split_reused) return load_split(result.split_file, manifest.classes);
    ClassSplit fresh;
    switch (config.split.strategy) {
      case SplitStrategy::nearest:
        fresh = nearest_split(pairwise_distances(canonical, config.split.metric),
                              config.split.unseen_count,
                              config.split.diversity_floor,
                              config.split.isolation);
        break;
      case SplitStrategy::furthest:
        fresh = furthest_split(pairwise_distances(canonical, config.split.metric),
                               config.split.unseen_count,
                               config.split.isolation);
        break;
      case SplitStrategy::random: {
        Rng rng(Rng::derive_seed(config.master_seed, kStageSplit));
        fresh = random_split(static_cast<int>(manifest.classes.size()),
                             config.split.unseen_count, rng);
        break;
      }
    }
    fresh.metric = config.split.metric;
    save_split(result.split_file, fresh, manifest.classes);
    return load_split(result.split_file, manifest.classes);
  });
  note(kStageSplit, split_reused);

  // --- encoder -----------------------------------------------------------
  result.encoder_file = out_dir / "encoder.ztg";
  const bool encoder_reused =
      !force && std::filesystem::exists(result.encoder_file);
  EncoderModel encoder = run_stage(kStageEncoder, [&] {
    if (!encoder_reused) {
      auto train_data = filter_by_classes(
          load_all_samples(result.dataset_dir, manifest), split.seen);
      EncoderConfig encoder_config = config.encoder;
      encoder_config.num_seen_classes = static_cast<int>(split.seen.size());
      Rng rng(Rng::derive_seed(config.master_seed, kStageEncoder));
      save_encoder(result.encoder_file,
                   train_encoder(train_data, encoder_config, topology,
                                 split.seen, rng));
    }
    EncoderModel loaded = load_encoder(result.encoder_file);
    if (loaded.seen_classes != split.seen) {
      throw DataError(
          "encoder checkpoint does not match the split's seen classes; rerun "
          "with --force");
    }
    return loaded;
  });
  note(kStageEncoder, encoder_reused);

  // --- features -----------------------------------------------------------
  result.seen_features_file = out_dir / "features_seen.zftr";
  result.unseen_features_file = out_dir / "features_unseen.zftr";
  const bool features_reused =
      !force && std::filesystem::exists(result.seen_features_file) &&
      std::filesystem::exists(result.unseen_features_file);
  auto features = run_stage("features", [&] {
    if (!features_reused) {
      auto samples = load_all_samples(result.dataset_dir, manifest);
      save_features(result.seen_features_file,
                    extract_features(encoder,
                                     filter_by_classes(samples, split.seen),
                                     /*normalize=*/true));
      save_features(result.unseen_features_file,
                    extract_features(encoder,
                                     filter_by_classes(samples, split.unseen),
                                     /*normalize=*/true));
    }
    auto seen = load_features(result.seen_features_file);
    auto unseen = load_features(result.unseen_features_file);
    if (seen.dim() != encoder.feature_dim() ||
        unseen.dim() != encoder.feature_dim()) {
      throw DataError(
          "feature files do not match the encoder feature width; rerun with "
          "--force");
    }
    return std::make_pair(std::move(seen), std::move(unseen));
  });
  note("features", features_reused);
  const VisualFeatureMatrix& seen_features = features.first;
  const VisualFeatureMatrix& unseen_features = features.second;

  // Hygiene audit over the persisted artifacts every training stage
  // consumes: training inputs must be seen-class only, the evaluation
  // population unseen-class only. Unseen *label embeddings* may flow into
  // head training; unseen samples never.
  json hygiene;
  {
    std::set<int> seen_set(split.seen.begin(), split.seen.end());
    for (std::size_t i = 0; i < seen_features.label_indices.size(); ++i) {
      if (!seen_set.count(seen_features.label_indices[i])) {
        throw ContaminationError(
            "hygiene audit: head-training features contain unseen class " +
            std::to_string(seen_features.label_indices[i]));
      }
    }
    for (std::size_t i = 0; i < unseen_features.label_indices.size(); ++i) {
      if (!split.is_unseen(unseen_features.label_indices[i])) {
        throw ContaminationError(
            "hygiene audit: evaluation features contain seen class " +
            std::to_string(unseen_features.label_indices[i]));
      }
    }
    hygiene["encoder_seen_classes_match_split"] =
        encoder.seen_classes == split.seen;
    hygiene["head_training_labels_subset_of_seen"] = true;
    hygiene["evaluation_labels_subset_of_unseen"] = true;
  }

  // --- heads and evaluation ----------------------------------------------
  std::vector<EvalReport> reports;
  auto evaluate_head = [&](const std::string& head_name, const RankFn& rank) {
    const auto report_path = [&](EvalParadigm paradigm) {
      return out_dir / "reports" /
             (head_name + "_" + to_string(paradigm) + ".json");
    };
    const bool reused = !force &&
                        std::filesystem::exists(report_path(EvalParadigm::zsl)) &&
                        std::filesystem::exists(report_path(EvalParadigm::gzsl));
    for (const EvalParadigm paradigm : {EvalParadigm::zsl, EvalParadigm::gzsl}) {
      const auto path = report_path(paradigm);
      if (reused) {
        reports.push_back(load_report_summary(path));
      } else {
        EvalReport report =
            paradigm == EvalParadigm::zsl
                ? evaluate_zsl(rank, head_name, embedding_source_name,
                               unseen_features, split, config.eval_ks,
                               config_echo)
                : evaluate_gzsl(rank, head_name, embedding_source_name,
                                unseen_features, split, config.eval_ks,
                                config_echo);
        save_report(path, report, manifest.classes);
        reports.push_back(std::move(report));
      }
      result.report_files.push_back(path);
    }
    note("evaluate-" + head_name, reused);
  };

  if (config.run_devise) {
    const auto head_file = out_dir / "devise.zdvs";
    const bool reused = !force && std::filesystem::exists(head_file);
    DeviseProjection projection = run_stage(kStageDevise, [&] {
      if (!reused) {
        Rng rng(Rng::derive_seed(config.master_seed, kStageDevise));
        save_devise(head_file,
                    train_devise(seen_features, active, split.seen,
                                 config.devise, rng),
                    config.devise);
      }
      auto [loaded, hyper] = load_devise(head_file);
      if (loaded.feature_dim() != seen_features.dim() ||
          loaded.embedding_dim() != active.dim()) {
        throw DataError("devise checkpoint dims do not match; rerun with --force");
      }
      return loaded;
    });
    note(kStageDevise, reused);
    result.head_files.push_back(head_file);
    run_stage("evaluate-devise", [&] {
      evaluate_head("devise",
                    [&projection, &active](std::span<const double> feature,
                                           const std::vector<int>& candidates) {
                      return predict_devise(projection, feature, candidates,
                                            active);
                    });
      return 0;
    });
  }

  if (config.run_relation) {
    const auto head_file = out_dir / "relation.zrel";
    const bool reused = !force && std::filesystem::exists(head_file);
    LoadedRelation relation = run_stage(kStageRelation, [&] {
      if (!reused) {
        Rng rng(Rng::derive_seed(config.master_seed, kStageRelation));
        RelationModel trained = train_relation(seen_features, active,
                                               split.seen, config.relation, rng);
        save_relation(head_file, trained.attr, trained.rel, config.relation);
      }
      LoadedRelation loaded = load_relation(head_file);
      if (loaded.attr.w1.dim(0) != active.dim() ||
          loaded.attr.w2.dim(1) != seen_features.dim()) {
        throw DataError(
            "relation checkpoint dims do not match; rerun with --force");
      }
      return loaded;
    });
    note(kStageRelation, reused);
    result.head_files.push_back(head_file);
    run_stage("evaluate-relation", [&] {
      evaluate_head("relation",
                    [&relation, &active](std::span<const double> feature,
                                         const std::vector<int>& candidates) {
                      return predict_relation(relation.attr, relation.rel,
                                              feature, candidates, active);
                    });
      return 0;
    });
  }

  // --- summary --------------------------------------------------------------
  result.summary_csv = out_dir / "reports" / "summary.csv";
  io::write_text_file(result.summary_csv, aggregate_reports_csv(reports));

  json summary;
  auto stage_list = json::array();
  for (const auto& [stage, status] : result.stages) {
    stage_list.push_back({{"stage", stage}, {"status", status}});
  }
  summary["stages"] = stage_list;
  summary["hygiene"] = hygiene;
  auto report_list = json::array();
  for (const auto& path : result.report_files) {
    report_list.push_back(path.filename().string());
  }
  summary["reports"] = report_list;
  summary["config"] = json::parse(config_echo);
  result.run_summary = out_dir / "run_summary.json";
  io::write_text_file(result.run_summary, summary.dump(2) + "\n");
  return result;
}

}  // namespace zsar
