#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "softsensor/featsel.hpp"
#include "softsensor/forest.hpp"
#include "softsensor/linear.hpp"
#include "softsensor/preprocess.hpp"

namespace softsensor::model_file {

inline constexpr int kFormatVersion = 1;

// On-disk soft-sensor model. Serialized as canonical JSON: keys sorted,
// doubles in shortest round-trip form, two-space indent, trailing newline.
struct ModelFile {
  int format_version = kFormatVersion;
  featsel::ModelKind kind = featsel::ModelKind::Forest;
  Variable target = Variable::TRP;
  std::vector<Variable> predictors;
  preprocess::TransformSpec transform;
  std::optional<linear::LinearModel> linear;
  std::optional<forest::ForestModel> forest;
  // Free-form provenance: dataset hash, split parameters, config echo,
  // tuning results.
  nlohmann::json metadata = nlohmann::json::object();

  // Predictions for rows holding raw predictor values in `predictors`
  // order; NaN where a predictor is missing.
  std::vector<double> predict(const Matrix& rows) const;
};

nlohmann::json to_json(const ModelFile& m);
ModelFile from_json(const nlohmann::json& j);

std::string serialize(const ModelFile& m);
ModelFile parse(const std::string& text);

void save(const ModelFile& m, const std::filesystem::path& path);
ModelFile load(const std::filesystem::path& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace softsensor::model_file
