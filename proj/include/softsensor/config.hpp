#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "softsensor/dataio.hpp"
#include "softsensor/featsel.hpp"
#include "softsensor/forest.hpp"
#include "softsensor/preprocess.hpp"

namespace softsensor::config {

// Flat `key = value` text grouped under `[section]` headers; `#` and `;`
// start comments. Keys are addressed as "section.key".
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);

enum class TransformMode { Preset, Auto, None };
enum class CompleteCase { AllColumns, ModelColumns };
enum class ForestSelection { Recursive, Forward };

struct RunConfig {
  std::filesystem::path data_path;
  std::string timestamp_format = dataio::LoadOptions{}.timestamp_format;
  dataio::ColumnMapping mapping;
  CompleteCase complete_case = CompleteCase::AllColumns;

  std::optional<Variable> target;
  std::vector<Variable> predictors;  // empty = every mapped surrogate
  featsel::ModelKind model = featsel::ModelKind::Forest;
  std::uint64_t seed = 42;
  double validation_fraction = 0.10;
  std::size_t n_bins = 10;
  std::size_t k = 5;
  std::size_t max_k = 0;
  bool correlate_raw = false;
  std::size_t plot_rows = 100;
  std::optional<Variable> flow_partner;

  TransformMode transform_mode = TransformMode::Auto;
  double skew_threshold = 0.5;
  preprocess::TransformSpec preset_transform;   // used in Preset mode
  preprocess::TransformSpec transform_overrides;  // applied on top in every mode

  bool tune = true;
  std::size_t search_n_trees = 50;
  forest::Grid grid = forest::Grid::standard();
  std::vector<std::size_t> tree_candidates = forest::kDefaultTreeCandidates;
  double tree_threshold = 0.05;
  ForestSelection forest_selection = ForestSelection::Recursive;

  // Target (throws ConfigError if unset) and resolved predictor list in
  // canonical order, excluding the target.
  Variable require_target() const;
  std::vector<Variable> resolved_predictors() const;

  // Preset transform (or auto suggestion) plus overrides, restricted to
  // `predictors`.
  preprocess::TransformSpec transform_for(const dataio::Dataset& working,
                                          const std::vector<Variable>& predictors) const;

  // Hyperparameters used when tuning is off: the first value of each grid
  // list.
  forest::HyperParams fixed_params() const;

  void validate() const;

  // Canonical key=value listing of every setting (sorted by key).
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Loads a preset ("enborne" or "cut"): column roster, default target,
// transform spec.
RunConfig preset(const std::string& name);

// Applies parsed key/values on top of `base`. Unknown keys are errors.
void apply(RunConfig& base, const KeyValues& kv);

RunConfig load(const std::filesystem::path& path, const std::string& preset_name = {});

}  // namespace softsensor::config
