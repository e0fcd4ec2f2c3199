#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "softsensor/forest.hpp"
#include "softsensor/matrix.hpp"
#include "softsensor/preprocess.hpp"
#include "softsensor/resample.hpp"
#include "softsensor/variables.hpp"

namespace softsensor::featsel {

enum class ModelKind { Linear, Forest };
enum class ScoringKind { AdjustedR2, CvRmse };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
std::string_view to_string(ScoringKind kind);

struct CandidateScore {
  Variable predictor;
  double score = 0.0;
};

struct SelectionStep {
  Variable predictor;      // variable added at this step
  double score_mean = 0.0;  // adjusted R^2 (linear) or mean CV RMSE (forest)
  double score_sd = 0.0;
  double rmse_mean = 0.0;  // CV RMSE of the subset, both model kinds
  double rmse_sd = 0.0;
  std::vector<CandidateScore> candidates;  // every extension evaluated
};

struct SelectionTrace {
  ModelKind model = ModelKind::Linear;
  ScoringKind scoring = ScoringKind::AdjustedR2;
  std::uint64_t seed = 0;
  std::vector<SelectionStep> steps;  // steps[i] describes the subset of size i+1

  std::vector<Variable> order() const;
  std::vector<Variable> prefix(std::size_t k) const;
};

// Model-specific knobs for forward selection.
struct SelectionOptions {
  ModelKind model = ModelKind::Linear;
  std::size_t max_k = 0;  // 0 = all predictors
  // Linear path: predictors transformed with this spec, then standardized
  // on each training fold.
  preprocess::TransformSpec transform;
  // Forest path.
  forest::HyperParams forest_params;
};

// Greedy forward selection. Every step scores each remaining predictor
// joined to the current set over the same folds and adds the best one:
// maximal pooled out-of-fold adjusted R^2 (p = subset size) for linear
// models, minimal mean CV RMSE for forests. Ties go to the candidate that
// comes first in `names`, which callers keep in canonical order.
SelectionTrace forward_select(const Matrix& x, std::span<const double> y,
                              const std::vector<Variable>& names,
                              const SelectionOptions& options, const resample::FoldPlan& folds);

// Recursive elimination built on forward runs: the variable a full forward
// run over the current pool adds last takes the worst open rank and leaves
// the pool, until one variable remains. The trace lists the ranks in order
// with each nested subset's CV RMSE from a refit with `refit_params`.
struct RankingResult {
  SelectionTrace trace;
  std::size_t forward_runs = 0;
};

RankingResult recursive_forest_ranking(const Matrix& x, std::span<const double> y,
                                       const std::vector<Variable>& names,
                                       const forest::HyperParams& search_params,
                                       const forest::HyperParams& refit_params,
                                       const resample::FoldPlan& folds);

// Columns: rank,predictor,score_mean,score_sd,rmse_mean,rmse_sd.
void write_trace_csv(const SelectionTrace& trace, const std::filesystem::path& path);
std::string trace_csv(const SelectionTrace& trace);

}  // namespace softsensor::featsel
