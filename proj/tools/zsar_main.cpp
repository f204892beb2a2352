// zsar: skeleton-based zero-shot action recognition experiments.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data or
// contamination error, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zsar/dataset.hpp"
#include "zsar/devise.hpp"
#include "zsar/encoder.hpp"
#include "zsar/error.hpp"
#include "zsar/evaluator.hpp"
#include "zsar/io.hpp"
#include "zsar/pipeline.hpp"
#include "zsar/relation.hpp"
#include "zsar/splits.hpp"
#include "zsar/synthetic.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

zsar::ExperimentConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) {
    throw zsar::ConfigError("--config is required");
  }
  if (!fs::exists(args.config_path)) {
    throw zsar::ConfigError("config file does not exist: " + args.config_path);
  }
  zsar::ExperimentConfig config =
      zsar::load_experiment_config(args.config_path);
  if (args.seed_set) config.master_seed = args.seed;
  return config;
}

// Loads the table in the dataset's class order and unit-normalizes it,
// matching what the training and evaluation stages consume.
zsar::LabelEmbeddingTable load_active_table(const std::string& path) {
  return zsar::normalize_table(zsar::load_embeddings(path));
}

int run_generate(const CommonArgs& args) {
  zsar::ExperimentConfig config = load_config(args);
  if (!config.synthetic) {
    throw zsar::ConfigError("generate: config has no dataset.synthetic block");
  }
  const fs::path out_dir = args.out;
  if (fs::exists(out_dir / "manifest.json") && !args.force) {
    throw zsar::ConfigError("generate: " + out_dir.string() +
                            " already holds a dataset (use --force)");
  }
  zsar::Rng rng(
      zsar::Rng::derive_seed(config.master_seed, zsar::kStageGenerate));
  const auto manifest =
      zsar::generate_synthetic_dataset(*config.synthetic, rng, out_dir);
  std::cout << "generated " << manifest.samples.size() << " samples over "
            << manifest.classes.size() << " classes in " << out_dir.string()
            << "\n";
  return 0;
}

int run_make_split(const CommonArgs& args, const std::string& dataset_dir,
                   const std::string& embeddings_path,
                   const std::string& strategy, int unseen_count,
                   const std::string& metric, double floor,
                   const std::string& isolation) {
  const auto manifest = zsar::load_manifest(dataset_dir);
  const std::string table_path =
      embeddings_path.empty()
          ? (fs::path(dataset_dir) / manifest.embeddings_file).string()
          : embeddings_path;
  const auto table = zsar::normalize_table(
      zsar::load_embeddings(table_path, manifest.classes));
  const auto kind = isolation == "mean_distance"
                        ? zsar::IsolationKind::mean_distance
                        : zsar::IsolationKind::nearest_neighbor;
  const auto metric_value = zsar::distance_metric_from_string(metric);
  zsar::ClassSplit split;
  const auto strategy_value = zsar::split_strategy_from_string(strategy);
  switch (strategy_value) {
    case zsar::SplitStrategy::nearest:
      split = zsar::nearest_split(zsar::pairwise_distances(table, metric_value),
                                  unseen_count, floor, kind);
      break;
    case zsar::SplitStrategy::furthest:
      split = zsar::furthest_split(
          zsar::pairwise_distances(table, metric_value), unseen_count, kind);
      break;
    case zsar::SplitStrategy::random: {
      zsar::Rng rng(args.seed_set ? args.seed : 1);
      split = zsar::random_split(static_cast<int>(manifest.classes.size()),
                                 unseen_count, rng);
      break;
    }
  }
  split.metric = metric_value;
  zsar::save_split(args.out, split, manifest.classes);
  std::cout << "split written to " << args.out << " (" << split.seen.size()
            << " seen / " << split.unseen.size() << " unseen)\n";
  return 0;
}

std::vector<zsar::SkeletonSequence> select_samples(
    const fs::path& dataset_dir, const zsar::DatasetManifest& manifest,
    const std::string& ids_file) {
  if (ids_file.empty()) return zsar::load_all_samples(dataset_dir, manifest);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(zsar::io::read_text_file(ids_file));
  } catch (const nlohmann::json::parse_error& e) {
    throw zsar::ParseError("ids file " + ids_file + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw zsar::ParseError("ids file " + ids_file +
                           ": expected a JSON array of sample ids");
  }
  std::set<std::string> wanted;
  for (const auto& id : doc) wanted.insert(id.get<std::string>());
  std::vector<zsar::SkeletonSequence> samples;
  std::set<std::string> found;
  for (const auto& entry : manifest.samples) {
    if (wanted.count(entry.id)) {
      samples.push_back(zsar::load_sample(dataset_dir, manifest, entry));
      found.insert(entry.id);
    }
  }
  for (const auto& id : wanted) {
    if (!found.count(id)) {
      throw zsar::DataError("ids file names unknown sample '" + id + "'");
    }
  }
  return samples;
}

int run_train_encoder(const CommonArgs& args, const std::string& dataset_dir,
                      const std::string& split_file,
                      const std::string& ids_file) {
  zsar::ExperimentConfig config = load_config(args);
  const auto manifest = zsar::load_manifest(dataset_dir);
  const auto topology = zsar::load_dataset_topology(dataset_dir, manifest);
  const auto split = zsar::load_split(split_file, manifest.classes);

  std::vector<zsar::SkeletonSequence> data;
  if (ids_file.empty()) {
    // Default training set: the seen-class samples.
    for (const auto& entry : manifest.samples) {
      if (split.is_seen(entry.label_index)) {
        data.push_back(zsar::load_sample(dataset_dir, manifest, entry));
      }
    }
  } else {
    // Exactly the listed samples, unfiltered; contamination checks in
    // train_encoder still apply.
    data = select_samples(dataset_dir, manifest, ids_file);
  }

  zsar::EncoderConfig encoder_config = config.encoder;
  encoder_config.num_seen_classes = static_cast<int>(split.seen.size());
  zsar::Rng rng(
      zsar::Rng::derive_seed(config.master_seed, zsar::kStageEncoder));
  const auto model =
      zsar::train_encoder(data, encoder_config, topology, split.seen, rng);
  zsar::save_encoder(args.out, model);
  std::cout << "encoder trained on " << data.size() << " samples, saved to "
            << args.out << "\n";
  return 0;
}

int run_extract_features(const CommonArgs& args, const std::string& dataset_dir,
                         const std::string& encoder_file,
                         const std::string& split_file,
                         const std::string& subset, bool normalize) {
  const auto manifest = zsar::load_manifest(dataset_dir);
  const auto model = zsar::load_encoder(encoder_file);
  std::vector<zsar::SkeletonSequence> data;
  if (subset == "all") {
    data = zsar::load_all_samples(dataset_dir, manifest);
  } else {
    if (split_file.empty()) {
      throw zsar::ConfigError("extract-features: --split is required for --subset " +
                              subset);
    }
    const auto split = zsar::load_split(split_file, manifest.classes);
    for (const auto& entry : manifest.samples) {
      const bool keep = subset == "seen" ? split.is_seen(entry.label_index)
                                         : split.is_unseen(entry.label_index);
      if (keep) data.push_back(zsar::load_sample(dataset_dir, manifest, entry));
    }
  }
  const auto features = zsar::extract_features(model, data, normalize);
  zsar::save_features(args.out, features);
  std::cout << "extracted " << features.count() << " x " << features.dim()
            << " features to " << args.out << "\n";
  return 0;
}

int run_train_devise(const CommonArgs& args, const std::string& features_file,
                     const std::string& embeddings_path,
                     const std::string& split_file) {
  zsar::ExperimentConfig config = load_config(args);
  const auto features = zsar::load_features(features_file);
  const auto table = load_active_table(embeddings_path);
  const auto split = zsar::load_split(split_file, table.labels);
  zsar::Rng rng(zsar::Rng::derive_seed(config.master_seed, zsar::kStageDevise));
  const auto projection =
      zsar::train_devise(features, table, split.seen, config.devise, rng);
  zsar::save_devise(args.out, projection, config.devise);
  std::cout << "devise head saved to " << args.out << "\n";
  return 0;
}

int run_train_relation(const CommonArgs& args, const std::string& features_file,
                       const std::string& embeddings_path,
                       const std::string& split_file) {
  zsar::ExperimentConfig config = load_config(args);
  const auto features = zsar::load_features(features_file);
  const auto table = load_active_table(embeddings_path);
  const auto split = zsar::load_split(split_file, table.labels);
  zsar::Rng rng(
      zsar::Rng::derive_seed(config.master_seed, zsar::kStageRelation));
  const auto model = zsar::train_relation(features, table, split.seen,
                                          config.relation, rng);
  zsar::save_relation(args.out, model.attr, model.rel, config.relation);
  std::cout << "relation head saved to " << args.out << "\n";
  return 0;
}

int run_evaluate(const CommonArgs& args, const std::string& features_file,
                 const std::string& embeddings_path,
                 const std::string& split_file, const std::string& head,
                 const std::string& checkpoint, const std::string& paradigm,
                 std::vector<int> ks) {
  const auto features = zsar::load_features(features_file);
  const auto table = load_active_table(embeddings_path);
  const auto split = zsar::load_split(split_file, table.labels);
  if (ks.empty()) ks = {1, 5};

  zsar::RankFn rank;
  if (head == "devise") {
    auto [projection, hyper] = zsar::load_devise(checkpoint);
    rank = [projection = std::move(projection), &table](
               std::span<const double> feature,
               const std::vector<int>& candidates) {
      return zsar::predict_devise(projection, feature, candidates, table);
    };
  } else if (head == "relation") {
    auto loaded = zsar::load_relation(checkpoint);
    rank = [loaded = std::move(loaded), &table](
               std::span<const double> feature,
               const std::vector<int>& candidates) {
      return zsar::predict_relation(loaded.attr, loaded.rel, feature,
                                    candidates, table);
    };
  } else {
    throw zsar::ConfigError("evaluate: head must be 'devise' or 'relation'");
  }

  const std::string source =
      table.source == zsar::EmbeddingSource::random ? "random" : "loaded";
  const auto paradigm_value = zsar::eval_paradigm_from_string(paradigm);
  const zsar::EvalReport report =
      paradigm_value == zsar::EvalParadigm::zsl
          ? zsar::evaluate_zsl(rank, head, source, features, split, ks)
          : zsar::evaluate_gzsl(rank, head, source, features, split, ks);
  zsar::save_report(args.out, report, table.labels);
  std::cout << "report written to " << args.out << "\n";
  for (const auto& [k, accuracy] : report.hit_at) {
    std::cout << "  hit@" << k << " = " << accuracy << "\n";
  }
  return 0;
}

int run_full_pipeline(const CommonArgs& args) {
  zsar::ExperimentConfig config = load_config(args);
  if (args.out.empty()) {
    throw zsar::ConfigError("run: --out is required");
  }
  const auto result = zsar::run_pipeline(config, args.out, args.force);
  for (const auto& [stage, status] : result.stages) {
    std::cout << stage << ": " << status << "\n";
  }
  std::cout << "summary: " << result.summary_csv.string() << "\n";
  return 0;
}

int run_report(const std::vector<std::string>& dirs, bool markdown) {
  std::vector<zsar::EvalReport> reports;
  for (const auto& dir : dirs) {
    const fs::path reports_dir = fs::path(dir) / "reports";
    const fs::path base = fs::exists(reports_dir) ? reports_dir : fs::path(dir);
    if (!fs::exists(base)) {
      throw zsar::ConfigError("report: no such directory: " + dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(base)) {
      if (entry.path().extension() == ".json" &&
          entry.path().filename() != "run_summary.json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      reports.push_back(zsar::load_report_summary(file));
    }
  }
  if (reports.empty()) {
    throw zsar::DataError("report: no evaluation reports found");
  }
  std::cout << (markdown ? zsar::aggregate_reports_markdown(reports)
                         : zsar::aggregate_reports_csv(reports));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton-based zero-shot action recognition"};
  app.require_subcommand(1);
  int exit_code = 0;

  CommonArgs common;
  auto add_common = [&common](CLI::App* cmd, bool with_force = true) {
    cmd->add_option("--config", common.config_path, "experiment config JSON");
    cmd->add_option("--out", common.out, "output file or directory");
    cmd->add_option("--seed", common.seed, "master seed override")
        ->each([&common](const std::string&) { common.seed_set = true; });
    if (with_force) {
      cmd->add_flag("--force", common.force, "recompute existing artifacts");
    }
  };

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(generate);
  generate->callback([&] { exit_code = run_generate(common); });

  // make-split
  std::string dataset_dir, embeddings_path, strategy = "nearest";
  std::string metric = "cosine", isolation = "nearest_neighbor";
  int unseen_count = 5;
  double floor = 0.0;
  auto* make_split = app.add_subcommand("make-split", "build a class split");
  add_common(make_split);
  make_split->add_option("--dataset", dataset_dir, "dataset directory")
      ->required();
  make_split->add_option("--embeddings", embeddings_path,
                         "embedding CSV (default: the dataset's)");
  make_split->add_option("--strategy", strategy,
                         "nearest | furthest | random");
  make_split->add_option("--unseen-count", unseen_count, "unseen class count");
  make_split->add_option("--metric", metric, "cosine | euclidean");
  make_split->add_option("--floor", floor, "diversity floor (nearest only)");
  make_split->add_option("--isolation", isolation,
                         "nearest_neighbor | mean_distance");
  make_split->callback([&] {
    exit_code = run_make_split(common, dataset_dir, embeddings_path, strategy,
                               unseen_count, metric, floor, isolation);
  });

  // train-encoder
  std::string split_file, ids_file;
  auto* train_enc = app.add_subcommand("train-encoder",
                                       "train the visual encoder");
  add_common(train_enc);
  train_enc->add_option("--dataset", dataset_dir, "dataset directory")
      ->required();
  train_enc->add_option("--split", split_file, "split JSON")->required();
  train_enc->add_option("--ids", ids_file,
                        "JSON array of sample ids to train on verbatim");
  train_enc->callback([&] {
    exit_code = run_train_encoder(common, dataset_dir, split_file, ids_file);
  });

  // extract-features
  std::string encoder_file, subset = "all";
  bool normalize = true;
  auto* extract = app.add_subcommand("extract-features",
                                     "run the encoder over samples");
  add_common(extract);
  extract->add_option("--dataset", dataset_dir, "dataset directory")
      ->required();
  extract->add_option("--encoder", encoder_file, "encoder checkpoint")
      ->required();
  extract->add_option("--split", split_file, "split JSON (for seen/unseen)");
  extract->add_option("--subset", subset, "seen | unseen | all");
  extract->add_flag("--normalize,!--no-normalize", normalize,
                    "unit-normalize feature rows (default on)");
  extract->callback([&] {
    exit_code = run_extract_features(common, dataset_dir, encoder_file,
                                     split_file, subset, normalize);
  });

  // train-devise / train-relation
  std::string features_file;
  auto* train_dev = app.add_subcommand("train-devise",
                                       "train the linear projection head");
  add_common(train_dev);
  train_dev->add_option("--features", features_file, "feature file")
      ->required();
  train_dev->add_option("--embeddings", embeddings_path, "embedding CSV")
      ->required();
  train_dev->add_option("--split", split_file, "split JSON")->required();
  train_dev->callback([&] {
    exit_code =
        run_train_devise(common, features_file, embeddings_path, split_file);
  });

  auto* train_rel = app.add_subcommand("train-relation",
                                       "train the learned-metric head");
  add_common(train_rel);
  train_rel->add_option("--features", features_file, "feature file")
      ->required();
  train_rel->add_option("--embeddings", embeddings_path, "embedding CSV")
      ->required();
  train_rel->add_option("--split", split_file, "split JSON")->required();
  train_rel->callback([&] {
    exit_code =
        run_train_relation(common, features_file, embeddings_path, split_file);
  });

  // evaluate
  std::string head, checkpoint, paradigm = "zsl";
  std::vector<int> ks;
  auto* evaluate = app.add_subcommand("evaluate", "score a trained head");
  add_common(evaluate);
  evaluate->add_option("--features", features_file, "unseen-class features")
      ->required();
  evaluate->add_option("--embeddings", embeddings_path, "embedding CSV")
      ->required();
  evaluate->add_option("--split", split_file, "split JSON")->required();
  evaluate->add_option("--head", head, "devise | relation")->required();
  evaluate->add_option("--checkpoint", checkpoint, "head checkpoint")
      ->required();
  evaluate->add_option("--paradigm", paradigm, "zsl | gzsl");
  evaluate->add_option("--ks", ks, "hit@k values (default 1 5)");
  evaluate->callback([&] {
    exit_code = run_evaluate(common, features_file, embeddings_path,
                             split_file, head, checkpoint, paradigm, ks);
  });

  // run
  auto* run = app.add_subcommand("run", "run the full pipeline");
  add_common(run);
  run->callback([&] { exit_code = run_full_pipeline(common); });

  // report
  std::vector<std::string> report_dirs;
  bool markdown = false;
  auto* report = app.add_subcommand("report", "aggregate evaluation reports");
  report->add_option("dirs", report_dirs, "pipeline output directories")
      ->required();
  report->add_flag("--markdown", markdown, "emit a Markdown table");
  report->callback([&] { exit_code = run_report(report_dirs, markdown); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const zsar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
