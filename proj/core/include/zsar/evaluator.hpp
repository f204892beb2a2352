#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "zsar/embeddings.hpp"
#include "zsar/features.hpp"
#include "zsar/splits.hpp"

namespace zsar {

enum class EvalParadigm { zsl, gzsl };

std::string to_string(EvalParadigm paradigm);
EvalParadigm eval_paradigm_from_string(const std::string& name);

// Ranks the candidate classes for one feature, best first.
using RankFn = std::function<std::vector<std::pair<int, double>>(
    std::span<const double> feature, const std::vector<int>& candidates)>;

struct EvalReport {
  std::string head;              // "devise" | "relation"
  std::string embedding_source;  // "loaded" | "random"
  ClassSplit split;
  EvalParadigm paradigm = EvalParadigm::zsl;
  std::map<int, double> hit_at;  // k -> accuracy in [0, 1]
  int sample_count = 0;
  std::string config_echo;  // serialized configuration, may be empty

  void validate() const;
};

// Fraction of samples whose true class appears among the top k entries of
// its ranking. Rankings shorter than k are a usage error.
double hit_at_k(const std::vector<std::vector<int>>& rankings,
                const std::vector<int>& truth, int k);

// ZSL: candidates are the unseen classes only. Every sample must be
// unseen-class; a seen-class sample raises ContaminationError. ks larger
// than the candidate list are dropped.
EvalReport evaluate_zsl(const RankFn& rank, const std::string& head,
                        const std::string& embedding_source,
                        const VisualFeatureMatrix& features,
                        const ClassSplit& split, const std::vector<int>& ks,
                        const std::string& config_echo = {});

// GZSL: same unseen-class test population ranked against all classes.
EvalReport evaluate_gzsl(const RankFn& rank, const std::string& head,
                         const std::string& embedding_source,
                         const VisualFeatureMatrix& features,
                         const ClassSplit& split, const std::vector<int>& ks,
                         const std::string& config_echo = {});

// Report file: JSON mirroring EvalReport; split labels resolved against
// the table's label order.
void save_report(const std::filesystem::path& path, const EvalReport& report,
                 const std::vector<std::string>& labels);
EvalReport load_report(const std::filesystem::path& path,
                       const std::vector<std::string>& labels);

// Loads just the fields aggregation needs (head, source, strategy,
// paradigm, hit@k); split membership lists stay unresolved.
EvalReport load_report_summary(const std::filesystem::path& path);

// Aggregate CSV over a set of reports: one row per (head, embedding
// source), one column per (split strategy, paradigm, k).
std::string aggregate_reports_csv(const std::vector<EvalReport>& reports);
// Same table rendered as Markdown.
std::string aggregate_reports_markdown(const std::vector<EvalReport>& reports);

}  // namespace zsar
