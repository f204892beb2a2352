#include "zsar/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

namespace {

// Splits one CSV record into fields. Quoted fields may contain commas and
// doubled quotes; embedded newlines are not supported and surface as a
// closing-quote error on the truncated line.
std::vector<std::string> split_csv_line(const std::string& line,
                                        int line_number) {
  std::vector<std::string> fields;
  std::string current;
  std::size_t i = 0;
  const auto fail = [line_number](const std::string& what) {
    throw ParseError("embedding CSV line " + std::to_string(line_number) +
                     ": " + what);
  };
  while (true) {
    current.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            current.push_back('"');
            i += 2;
          } else {
            ++i;
            closed = true;
            break;
          }
        } else {
          current.push_back(line[i]);
          ++i;
        }
      }
      if (!closed) fail("unterminated quoted field");
      if (i < line.size() && line[i] != ',') {
        fail("unexpected character after closing quote");
      }
    } else {
      while (i < line.size() && line[i] != ',') {
        if (line[i] == '"') fail("bare quote inside unquoted field");
        current.push_back(line[i]);
        ++i;
      }
    }
    fields.push_back(current);
    if (i >= line.size()) break;
    ++i;  // consume the comma
  }
  return fields;
}

std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

double parse_cell(const std::string& cell, int line_number, int column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || cell.empty()) {
    throw ParseError("embedding CSV line " + std::to_string(line_number) +
                     ": non-numeric cell '" + cell + "' in column " +
                     std::to_string(column));
  }
  if (!std::isfinite(value)) {
    throw ParseError("embedding CSV line " + std::to_string(line_number) +
                     ": non-finite value in column " + std::to_string(column));
  }
  // File interchange is 32-bit; quantize so round-trips are exact.
  return static_cast<double>(static_cast<float>(value));
}

bool rows_unit_normalized(const Tensor& m) {
  for (int i = 0; i < m.dim(0); ++i) {
    if (std::abs(l2_norm(m.row(i)) - 1.0) > 1e-6) return false;
  }
  return true;
}

}  // namespace

int LabelEmbeddingTable::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  return it == labels.end() ? -1
                            : static_cast<int>(it - labels.begin());
}

LabelEmbeddingTable load_embeddings(
    const std::filesystem::path& path,
    const std::optional<std::vector<std::string>>& expected_labels) {
  const std::string text = io::read_text_file(path);
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  if (lines.empty()) {
    throw ParseError("embedding CSV " + path.string() + ": empty file");
  }

  const auto header = split_csv_line(lines[0], 1);
  if (header.size() < 2 || header[0] != "label") {
    throw ParseError("embedding CSV line 1: header must be label,d0,...");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  for (int d = 0; d < dim; ++d) {
    if (header[static_cast<std::size_t>(d) + 1] != "d" + std::to_string(d)) {
      throw ParseError("embedding CSV line 1: expected column d" +
                       std::to_string(d) + ", got '" +
                       header[static_cast<std::size_t>(d) + 1] + "'");
    }
  }

  std::vector<std::string> labels;
  std::vector<double> values;
  std::set<std::string> seen_labels;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;  // tolerate a trailing blank line
    const int line_number = static_cast<int>(row) + 1;
    const auto fields = split_csv_line(lines[row], line_number);
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw ParseError("embedding CSV line " + std::to_string(line_number) +
                       ": expected " + std::to_string(dim + 1) +
                       " fields, got " + std::to_string(fields.size()));
    }
    if (!seen_labels.insert(fields[0]).second) {
      throw ParseError("embedding CSV line " + std::to_string(line_number) +
                       ": duplicate label '" + fields[0] + "'");
    }
    labels.push_back(fields[0]);
    for (int d = 0; d < dim; ++d) {
      values.push_back(
          parse_cell(fields[static_cast<std::size_t>(d) + 1], line_number, d));
    }
  }
  if (labels.empty()) {
    throw ParseError("embedding CSV " + path.string() + ": no data rows");
  }

  LabelEmbeddingTable table;
  table.labels = labels;
  table.embeddings =
      Tensor::from({static_cast<int>(labels.size()), dim}, std::move(values));
  table.source = EmbeddingSource::loaded;

  if (expected_labels.has_value()) {
    for (const auto& expected : *expected_labels) {
      if (!seen_labels.count(expected)) {
        throw ParseError("embedding CSV " + path.string() +
                         ": missing expected label '" + expected + "'");
      }
    }
    if (expected_labels->size() != labels.size()) {
      for (const auto& label : labels) {
        if (std::find(expected_labels->begin(), expected_labels->end(),
                      label) == expected_labels->end()) {
          throw ParseError("embedding CSV " + path.string() +
                           ": unexpected label '" + label + "'");
        }
      }
    }
    // Reorder rows to the expected order.
    Tensor reordered({static_cast<int>(expected_labels->size()), dim});
    for (std::size_t i = 0; i < expected_labels->size(); ++i) {
      const int from = table.index_of((*expected_labels)[i]);
      const auto src = table.embeddings.row(from);
      auto dst = reordered.row(static_cast<int>(i));
      std::copy(src.begin(), src.end(), dst.begin());
    }
    table.labels = *expected_labels;
    table.embeddings = std::move(reordered);
  }

  table.normalized = rows_unit_normalized(table.embeddings);
  return table;
}

void save_embeddings(const std::filesystem::path& path,
                     const LabelEmbeddingTable& table) {
  std::ostringstream out;
  out << "label";
  for (int d = 0; d < table.dim(); ++d) out << ",d" << d;
  out << "\n";
  char buffer[32];
  for (int i = 0; i < table.class_count(); ++i) {
    out << csv_escape(table.labels[static_cast<std::size_t>(i)]);
    for (int d = 0; d < table.dim(); ++d) {
      // %.9g prints float32 values exactly enough to round-trip.
      std::snprintf(buffer, sizeof(buffer), "%.9g",
                    static_cast<double>(static_cast<float>(table.embeddings(i, d))));
      out << ',' << buffer;
    }
    out << "\n";
  }
  io::write_text_file(path, out.str());
}

LabelEmbeddingTable random_embeddings(const std::vector<std::string>& labels,
                                      int dim, Rng& rng) {
  if (dim < 1) {
    throw ConfigError("random_embeddings: dim must be >= 1");
  }
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() != labels.size()) {
    throw ConfigError("random_embeddings: labels must be unique");
  }
  LabelEmbeddingTable table;
  table.labels = labels;
  table.embeddings = Tensor({static_cast<int>(labels.size()), dim});
  for (int i = 0; i < table.class_count(); ++i) {
    auto row = table.embeddings.row(i);
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (double& x : row) {
        x = rng.normal();
        norm_sq += x * x;
      }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : row) x *= inv;
  }
  table.source = EmbeddingSource::random;
  table.random_seed = rng.seed();
  table.normalized = true;
  return table;
}

LabelEmbeddingTable normalize_table(const LabelEmbeddingTable& table) {
  LabelEmbeddingTable out = table;
  unit_normalize_rows(out.embeddings);
  out.normalized = true;
  return out;
}

std::string to_string(DistanceMetric metric) {
  return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

DistanceMetric distance_metric_from_string(const std::string& name) {
  if (name == "cosine") return DistanceMetric::cosine;
  if (name == "euclidean") return DistanceMetric::euclidean;
  throw ConfigError("unknown distance metric '" + name + "'");
}

Tensor pairwise_distances(const LabelEmbeddingTable& table,
                          DistanceMetric metric) {
  const int count = table.class_count();
  if (count == 0) {
    throw DataError("pairwise_distances: empty table");
  }
  std::vector<double> norms(static_cast<std::size_t>(count));
  if (metric == DistanceMetric::cosine) {
    for (int i = 0; i < count; ++i) {
      norms[static_cast<std::size_t>(i)] = l2_norm(table.embeddings.row(i));
      if (norms[static_cast<std::size_t>(i)] == 0.0) {
        throw DataError("pairwise_distances: zero-norm row " +
                        std::to_string(i) + " under cosine metric");
      }
    }
  }
  Tensor dist({count, count});
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      double d = 0.0;
      if (metric == DistanceMetric::cosine) {
        const double sim =
            dot(table.embeddings.row(i), table.embeddings.row(j)) /
            (norms[static_cast<std::size_t>(i)] *
             norms[static_cast<std::size_t>(j)]);
        d = 1.0 - sim;
      } else {
        const auto a = table.embeddings.row(i);
        const auto b = table.embeddings.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
          const double diff = a[k] - b[k];
          acc += diff * diff;
        }
        d = std::sqrt(acc);
      }
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

}  // namespace zsar
