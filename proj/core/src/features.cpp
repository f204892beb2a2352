#include "zsar/features.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zsar/error.hpp"
#include "zsar/io.hpp"

namespace zsar {

void VisualFeatureMatrix::validate() const {
  if (features.rank() != 2) {
    throw ShapeError("feature matrix must be rank 2, got " +
                     dims_to_string(features.dims()));
  }
  if (static_cast<int>(label_indices.size()) != count()) {
    throw ShapeError("feature matrix has " + std::to_string(count()) +
                     " rows but " + std::to_string(label_indices.size()) +
                     " labels");
  }
  check_finite(features, "feature matrix");
  if (unit_normalized) {
    for (int i = 0; i < count(); ++i) {
      if (std::abs(l2_norm(features.row(i)) - 1.0) > 1e-6) {
        throw DataError("feature matrix flagged normalized but row " +
                        std::to_string(i) + " is not unit norm");
      }
    }
  }
}

void save_features(const std::filesystem::path& path,
                   const VisualFeatureMatrix& features) {
  features.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  nlohmann::json header;
  header["count"] = features.count();
  header["dim"] = features.dim();
  header["normalized"] = features.unit_normalized;
  header["label_indices"] = features.label_indices;
  io::write_magic(out, "ZFTR");
  io::write_u32(out, io::kFormatVersion);
  io::write_header_blob(out, header.dump());
  io::write_f32_tensor(out, features.features);
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

VisualFeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  const std::string context = "feature file " + path.string();
  io::expect_magic(in, "ZFTR", context);
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
  VisualFeatureMatrix features;
  try {
    const int count = header.at("count").get<int>();
    const int dim = header.at("dim").get<int>();
    features.features = Tensor({count, dim});
    features.unit_normalized = header.at("normalized").get<bool>();
    features.label_indices =
        header.at("label_indices").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": bad header: " + e.what());
  }
  io::read_f32_tensor(in, features.features, context);
  // Unit norms survive the f32 round-trip only to float precision.
  if (features.unit_normalized) {
    unit_normalize_rows(features.features);
  }
  features.validate();
  return features;
}

}  // namespace zsar
