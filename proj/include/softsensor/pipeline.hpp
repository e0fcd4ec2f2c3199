#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softsensor/config.hpp"
#include "softsensor/dataio.hpp"
#include "softsensor/featsel.hpp"
#include "softsensor/forest.hpp"
#include "softsensor/metrics.hpp"
#include "softsensor/model_file.hpp"
#include "softsensor/preprocess.hpp"
#include "softsensor/resample.hpp"

namespace softsensor::pipeline {

// Seed streams derived from the run seed.
inline constexpr std::uint64_t kSplitStream = 1;
inline constexpr std::uint64_t kFoldStream = 2;
inline constexpr std::uint64_t kForestStream = 3;

// A loaded, complete-case-filtered dataset with its validation holdout.
struct Prepared {
  dataio::Dataset raw;
  dataio::Dataset complete;
  Variable target = Variable::TRP;
  std::vector<Variable> required;
  resample::SplitPlan split;
  std::string dataset_sha256;

  dataio::Dataset working() const { return complete.select_rows(split.working_indices); }
  dataio::Dataset validation() const { return complete.select_rows(split.validation_indices); }
};

// Columns that must be present for a row to survive filtering.
std::vector<Variable> required_columns(const config::RunConfig& cfg, Variable target,
                                       const std::vector<Variable>& predictors);

Prepared prepare(const config::RunConfig& cfg, Variable target,
                 const std::vector<Variable>& predictors);

struct SummaryResult {
  std::size_t raw_rows = 0;
  std::size_t complete_rows = 0;
  dataio::SummaryStats stats;
};

SummaryResult cmd_summary(const config::RunConfig& cfg);
std::string summary_csv(const SummaryResult& r, const dataio::ColumnMapping& mapping);
std::string summary_table(const SummaryResult& r, const dataio::ColumnMapping& mapping);

struct CorrelationResult {
  Variable target;
  std::vector<preprocess::Correlation> ranking;
};

// Rankings for the configured target, or every mapped target when none is
// set. Predictors are transformed first unless cfg.correlate_raw.
std::vector<CorrelationResult> cmd_correlate(const config::RunConfig& cfg);
std::string correlation_csv(const std::vector<CorrelationResult>& results);

struct ForestTuning {
  forest::HyperParams params;  // includes the chosen tree count
  std::optional<forest::GridResult> grid;
  std::optional<forest::TreeCountResult> tree_count;
};

// Grid search (or the fixed parameters when tuning is off) followed by the
// tree-count rule, on the given working set.
ForestTuning tune_forest(const config::RunConfig& cfg, const Matrix& x,
                         std::span<const double> y, const resample::FoldPlan& folds);

struct SelectResult {
  featsel::SelectionTrace trace;
  std::optional<ForestTuning> tuning;
  std::size_t forward_runs = 0;
};

SelectResult cmd_select(const config::RunConfig& cfg);

// Trains on the working split. `predictors` empty = cfg.resolved_predictors().
model_file::ModelFile cmd_train(const config::RunConfig& cfg,
                                const std::vector<Variable>& predictors = {});

struct Evaluation {
  metrics::EvaluationReport report;
  std::vector<std::int64_t> timestamps;
  std::vector<double> observed;
  std::vector<double> predicted;
  bool on_training_rows = false;
};

// Rebuilds the model's validation split from its metadata and scores it.
// With on_training set, scores the working rows instead (and warns).
Evaluation cmd_evaluate(const model_file::ModelFile& model, const config::RunConfig& cfg,
                        bool on_training = false);

struct Prediction {
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;
  std::size_t missing = 0;
};

// Input headers come from the mapping recorded in the model (overridable
// by `mapping`); only Timestamp and the model's predictors are read.
Prediction cmd_predict(const model_file::ModelFile& model, const std::filesystem::path& input,
                       const std::optional<dataio::ColumnMapping>& mapping = std::nullopt);
std::string prediction_csv(const Prediction& p, const std::string& timestamp_format);

struct PlotRow {
  std::size_t index;
  std::int64_t timestamp;
  double observed;
  double predicted;
};

// First `rows` validation observations in time order (clipped to the
// validation size).
std::vector<PlotRow> cmd_export_plot(const model_file::ModelFile& model,
                                     const config::RunConfig& cfg, std::size_t rows);
std::string plot_csv(const std::vector<PlotRow>& rows);

struct FlowBackupEntry {
  std::vector<Variable> predictors;
  metrics::EvaluationReport report;
  forest::HyperParams params;
};

// Forests on {Flow} and {Flow, partner}; the partner is cfg.flow_partner
// or the surrogate most correlated with the target.
std::vector<FlowBackupEntry> cmd_flow_backup(const config::RunConfig& cfg);

// Byte-for-byte dump of one tree.
std::string cmd_dump_tree(const model_file::ModelFile& model, std::size_t tree_index,
                          int max_depth);

}  // namespace softsensor::pipeline
