#include "zsar/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

std::string to_string(EvalParadigm paradigm) {
  return paradigm == EvalParadigm::zsl ? "zsl" : "gzsl";
}

EvalParadigm eval_paradigm_from_string(const std::string& name) {
  if (name == "zsl") return EvalParadigm::zsl;
  if (name == "gzsl") return EvalParadigm::gzsl;
  throw ConfigError("unknown evaluation paradigm '" + name + "'");
}

void EvalReport::validate() const {
  if (sample_count <= 0) {
    throw ConfigError("eval report: sample_count must be positive");
  }
  double previous = -1.0;
  int previous_k = 0;
  for (const auto& [k, accuracy] : hit_at) {
    if (accuracy < 0.0 || accuracy > 1.0) {
      throw ConfigError("eval report: accuracy out of [0, 1]");
    }
    if (previous_k > 0 && accuracy + 1e-12 < previous) {
      throw ConfigError("eval report: hit@k must be non-decreasing in k");
    }
    previous = accuracy;
    previous_k = k;
  }
}

double hit_at_k(const std::vector<std::vector<int>>& rankings,
                const std::vector<int>& truth, int k) {
  if (k < 1) {
    throw ConfigError("hit_at_k: k must be >= 1");
  }
  if (rankings.size() != truth.size()) {
    throw ConfigError("hit_at_k: rankings and truth are misaligned");
  }
  if (rankings.empty()) {
    throw ConfigError("hit_at_k: no samples");
  }
  int hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& ranking = rankings[i];
    if (static_cast<int>(ranking.size()) < k) {
      throw ConfigError("hit_at_k: k = " + std::to_string(k) +
                        " exceeds ranking length " +
                        std::to_string(ranking.size()));
    }
    const auto end = ranking.begin() + k;
    if (std::find(ranking.begin(), end, truth[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

namespace {

EvalReport evaluate(const RankFn& rank, const std::string& head,
                    const std::string& embedding_source,
                    const VisualFeatureMatrix& features,
                    const ClassSplit& split, EvalParadigm paradigm,
                    const std::vector<int>& ks,
                    const std::string& config_echo) {
  features.validate();
  split.validate();
  if (features.count() == 0) {
    throw ConfigError("evaluate: no samples");
  }
  for (std::size_t i = 0; i < features.label_indices.size(); ++i) {
    if (!split.is_unseen(features.label_indices[i])) {
      throw ContaminationError(
          "evaluate: sample " + std::to_string(i) + " has seen class " +
          std::to_string(features.label_indices[i]) +
          "; the test population must be unseen-class only");
    }
  }

  std::vector<int> candidates = split.unseen;
  if (paradigm == EvalParadigm::gzsl) {
    candidates.insert(candidates.end(), split.seen.begin(), split.seen.end());
    std::sort(candidates.begin(), candidates.end());
  }

  std::vector<std::vector<int>> rankings;
  rankings.reserve(static_cast<std::size_t>(features.count()));
  for (int i = 0; i < features.count(); ++i) {
    const auto ranked = rank(features.features.row(i), candidates);
    if (ranked.size() != candidates.size()) {
      throw ConfigError("evaluate: head returned " +
                        std::to_string(ranked.size()) + " entries for " +
                        std::to_string(candidates.size()) + " candidates");
    }
    std::vector<int> indices;
    indices.reserve(ranked.size());
    for (const auto& [class_index, score] : ranked) {
      (void)score;
      indices.push_back(class_index);
    }
    rankings.push_back(std::move(indices));
  }

  EvalReport report;
  report.head = head;
  report.embedding_source = embedding_source;
  report.split = split;
  report.paradigm = paradigm;
  report.sample_count = features.count();
  report.config_echo = config_echo;
  for (int k : ks) {
    if (k > static_cast<int>(candidates.size())) continue;
    report.hit_at[k] = hit_at_k(rankings, features.label_indices, k);
  }
  report.validate();
  return report;
}

}  // namespace

EvalReport evaluate_zsl(const RankFn& rank, const std::string& head,
                        const std::string& embedding_source,
                        const VisualFeatureMatrix& features,
                        const ClassSplit& split, const std::vector<int>& ks,
                        const std::string& config_echo) {
  return evaluate(rank, head, embedding_source, features, split,
                  EvalParadigm::zsl, ks, config_echo);
}

EvalReport evaluate_gzsl(const RankFn& rank, const std::string& head,
                         const std::string& embedding_source,
                         const VisualFeatureMatrix& features,
                         const ClassSplit& split, const std::vector<int>& ks,
                         const std::string& config_echo) {
  return evaluate(rank, head, embedding_source, features, split,
                  EvalParadigm::gzsl, ks, config_echo);
}

void save_report(const std::filesystem::path& path, const EvalReport& report,
                 const std::vector<std::string>& labels) {
  report.validate();
  nlohmann::json doc;
  doc["head"] = report.head;
  doc["embedding_source"] = report.embedding_source;
  doc["paradigm"] = to_string(report.paradigm);
  doc["sample_count"] = report.sample_count;
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, accuracy] : report.hit_at) {
    hits[std::to_string(k)] = accuracy;
  }
  doc["hit_at"] = hits;
  auto to_labels = [&labels](const std::vector<int>& indices) {
    std::vector<std::string> out;
    for (int c : indices) out.push_back(labels.at(static_cast<std::size_t>(c)));
    return out;
  };
  doc["split"] = {
      {"strategy", to_string(report.split.strategy)},
      {"metric", to_string(report.split.metric)},
      {"seen", to_labels(report.split.seen)},
      {"unseen", to_labels(report.split.unseen)},
  };
  if (report.split.seed) doc["split"]["seed"] = *report.split.seed;
  if (report.split.diversity_floor) {
    doc["split"]["diversity_floor"] = *report.split.diversity_floor;
  }
  if (!report.config_echo.empty()) {
    try {
      doc["config_echo"] = nlohmann::json::parse(report.config_echo);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("save_report: config_echo is not JSON: ") +
                       e.what());
    }
  }
  io::write_text_file(path, doc.dump(2) + "\n");
}

EvalReport load_report(const std::filesystem::path& path,
                       const std::vector<std::string>& labels) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("report file " + path.string() + ": " + e.what());
  }
  EvalReport report;
  try {
    report.head = doc.at("head").get<std::string>();
    report.embedding_source = doc.at("embedding_source").get<std::string>();
    report.paradigm =
        eval_paradigm_from_string(doc.at("paradigm").get<std::string>());
    report.sample_count = doc.at("sample_count").get<int>();
    for (const auto& [key, value] : doc.at("hit_at").items()) {
      report.hit_at[std::stoi(key)] = value.get<double>();
    }
    const auto& s = doc.at("split");
    auto to_indices = [&labels, &path](const nlohmann::json& list) {
      std::vector<int> out;
      for (const auto& item : list) {
        const std::string label = item.get<std::string>();
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) {
          throw DataError("report file " + path.string() +
                          ": unknown label '" + label + "'");
        }
        out.push_back(static_cast<int>(it - labels.begin()));
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    report.split.strategy =
        split_strategy_from_string(s.at("strategy").get<std::string>());
    report.split.metric =
        distance_metric_from_string(s.at("metric").get<std::string>());
    report.split.seen = to_indices(s.at("seen"));
    report.split.unseen = to_indices(s.at("unseen"));
    if (s.contains("seed")) {
      report.split.seed = s.at("seed").get<std::uint64_t>();
    }
    if (s.contains("diversity_floor")) {
      report.split.diversity_floor = s.at("diversity_floor").get<double>();
    }
    if (doc.contains("config_echo")) {
      report.config_echo = doc.at("config_echo").dump();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report file " + path.string() + ": " + e.what());
  }
  report.validate();
  return report;
}

EvalReport load_report_summary(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("report file " + path.string() + ": " + e.what());
  }
  EvalReport report;
  try {
    report.head = doc.at("head").get<std::string>();
    report.embedding_source = doc.at("embedding_source").get<std::string>();
    report.paradigm =
        eval_paradigm_from_string(doc.at("paradigm").get<std::string>());
    report.sample_count = doc.at("sample_count").get<int>();
    for (const auto& [key, value] : doc.at("hit_at").items()) {
      report.hit_at[std::stoi(key)] = value.get<double>();
    }
    report.split.strategy = split_strategy_from_string(
        doc.at("split").at("strategy").get<std::string>());
    report.split.metric = distance_metric_from_string(
        doc.at("split").at("metric").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report file " + path.string() + ": " + e.what());
  }
  return report;
}

namespace {

struct TableLayout {
  std::vector<std::pair<std::string, std::string>> rows;  // head, source
  std::vector<std::tuple<std::string, std::string, int>> columns;
};

TableLayout layout_reports(const std::vector<EvalReport>& reports) {
  TableLayout layout;
  std::set<std::pair<std::string, std::string>> row_keys;
  std::set<std::tuple<std::string, std::string, int>> column_keys;
  for (const auto& report : reports) {
    row_keys.insert({report.head, report.embedding_source});
    for (const auto& [k, accuracy] : report.hit_at) {
      column_keys.insert(
          {to_string(report.split.strategy), to_string(report.paradigm), k});
    }
  }
  layout.rows.assign(row_keys.begin(), row_keys.end());
  layout.columns.assign(column_keys.begin(), column_keys.end());
  return layout;
}

std::string find_cell(const std::vector<EvalReport>& reports,
                      const std::pair<std::string, std::string>& row,
                      const std::tuple<std::string, std::string, int>& column,
                      bool percent) {
  for (const auto& report : reports) {
    if (report.head != row.first || report.embedding_source != row.second) {
      continue;
    }
    if (to_string(report.split.strategy) != std::get<0>(column) ||
        to_string(report.paradigm) != std::get<1>(column)) {
      continue;
    }
    const auto it = report.hit_at.find(std::get<2>(column));
    if (it == report.hit_at.end()) continue;
    char buffer[32];
    if (percent) {
      std::snprintf(buffer, sizeof(buffer), "%.2f", it->second * 100.0);
    } else {
      std::snprintf(buffer, sizeof(buffer), "%.6f", it->second);
    }
    return buffer;
  }
  return "";
}

}  // namespace

std::string aggregate_reports_csv(const std::vector<EvalReport>& reports) {
  const TableLayout layout = layout_reports(reports);
  std::ostringstream out;
  out << "head,embedding_source";
  for (const auto& [strategy, paradigm, k] : layout.columns) {
    out << ',' << strategy << '_' << paradigm << "_hit" << k;
  }
  out << '\n';
  for (const auto& row : layout.rows) {
    out << row.first << ',' << row.second;
    for (const auto& column : layout.columns) {
      out << ',' << find_cell(reports, row, column, false);
    }
    out << '\n';
  }
  return out.str();
}

std::string aggregate_reports_markdown(const std::vector<EvalReport>& reports) {
  const TableLayout layout = layout_reports(reports);
  std::ostringstream out;
  out << "| head | embeddings |";
  for (const auto& [strategy, paradigm, k] : layout.columns) {
    out << ' ' << strategy << ' ' << paradigm << " hit@" << k << " (%) |";
  }
  out << "\n|---|---|";
  for (std::size_t i = 0; i < layout.columns.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& row : layout.rows) {
    out << "| " << row.first << " | " << row.second << " |";
    for (const auto& column : layout.columns) {
      out << ' ' << find_cell(reports, row, column, true) << " |";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace zsar
