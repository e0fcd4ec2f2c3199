#include "softsensor/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "softsensor/error.hpp"
#include "softsensor/linear.hpp"
#include "softsensor/log.hpp"
#include "softsensor/metrics.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::featsel {

namespace {

struct SubsetScore {
  double score_mean = 0.0;
  double score_sd = 0.0;
  metrics::CvResult cv;
};

metrics::ModelRecipe linear_recipe(const std::vector<Variable>& names,
                                   const preprocess::TransformSpec& transform) {
  return [names, transform](const Matrix& tx, std::span<const double> ty, const Matrix& vx) {
    return linear::predict_linear(linear::fit_linear_pipeline(tx, ty, names, transform), vx);
  };
}

metrics::ModelRecipe forest_recipe(const forest::HyperParams& hp) {
  return [hp](const Matrix& tx, std::span<const double> ty, const Matrix& vx) {
    return forest::predict_forest(forest::fit_forest(tx, ty, hp), vx);
  };
}

SubsetScore score_subset(const Matrix& x, std::span<const double> y,
                         const std::vector<Variable>& names, const SelectionOptions& options,
                         const resample::FoldPlan& folds) {
  SubsetScore s;
  if (options.model == ModelKind::Linear) {
    s.cv = metrics::cross_val_rmse(linear_recipe(names, options.transform), x, y, folds);
    s.score_mean = metrics::adjusted_r2(y, s.cv.predictions, names.size());
    std::vector<double> per_fold;
    for (std::size_t f = 0; f < folds.k; ++f) {
      const auto [train, test] = folds.fold(f);
      const auto ty = select(y, test);
      const auto tp = select(s.cv.predictions, test);
      try {
        per_fold.push_back(metrics::adjusted_r2(ty, tp, names.size()));
      } catch (const NumericalError&) {
      }
    }
    s.score_sd = metrics::mean_sd(per_fold).second;
  } else {
    s.cv = metrics::cross_val_rmse(forest_recipe(options.forest_params), x, y, folds);
    s.score_mean = s.cv.mean;
    s.score_sd = s.cv.sd;
  }
  return s;
}

bool better(ModelKind model, double candidate, double incumbent) {
  return model == ModelKind::Linear ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Linear ? "linear" : "forest";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "linear" || name == "mlr") return ModelKind::Linear;
  if (name == "forest" || name == "rf") return ModelKind::Forest;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(ScoringKind kind) {
  return kind == ScoringKind::AdjustedR2 ? "adjusted_r2" : "cv_rmse";
}

std::vector<Variable> SelectionTrace::order() const {
  std::vector<Variable> out;
  for (const auto& s : steps) out.push_back(s.predictor);
  return out;
}

std::vector<Variable> SelectionTrace::prefix(std::size_t k) const {
  auto o = order();
  o.resize(std::min(k, o.size()));
  return o;
}

SelectionTrace forward_select(const Matrix& x, std::span<const double> y,
                              const std::vector<Variable>& names,
                              const SelectionOptions& options, const resample::FoldPlan& folds) {
  const std::size_t p = x.cols();
  if (names.size() != p) throw DataError("forward_select: name count does not match the matrix");
  const std::size_t max_k = options.max_k == 0 ? p : options.max_k;
  if (max_k > p) {
    throw ConfigError("max_k = " + std::to_string(max_k) + " exceeds the " +
                      std::to_string(p) + " available predictors");
  }

  SelectionTrace trace;
  trace.model = options.model;
  trace.scoring =
      options.model == ModelKind::Linear ? ScoringKind::AdjustedR2 : ScoringKind::CvRmse;
  trace.seed = options.model == ModelKind::Forest ? options.forest_params.seed : folds.seed;

  std::vector<std::size_t> chosen;
  std::vector<bool> used(p, false);
  for (std::size_t step = 0; step < max_k; ++step) {
    std::optional<std::size_t> best;
    SubsetScore best_score;
    SelectionStep record;
    for (std::size_t c = 0; c < p; ++c) {
      if (used[c]) continue;
      std::vector<std::size_t> cols = chosen;
      cols.push_back(c);
      // Columns in canonical order so the fitted model is order-free.
      std::sort(cols.begin(), cols.end());
      std::vector<Variable> sub_names;
      for (auto i : cols) sub_names.push_back(names[i]);
      SubsetScore s;
      try {
        s = score_subset(x.select_cols(cols), y, sub_names, options, folds);
      } catch (const NumericalError& e) {
        log_warning("skipping candidate " + std::string(to_string(names[c])) + ": " + e.what());
        continue;
      }
      record.candidates.push_back({names[c], s.score_mean});
      if (!best || better(options.model, s.score_mean, best_score.score_mean)) {
        best = c;
        best_score = std::move(s);
      }
    }
    if (!best) throw NumericalError("forward selection: no admissible candidate at step " +
                                    std::to_string(step + 1));
    used[*best] = true;
    chosen.push_back(*best);
    record.predictor = names[*best];
    record.score_mean = best_score.score_mean;
    record.score_sd = best_score.score_sd;
    record.rmse_mean = best_score.cv.mean;
    record.rmse_sd = best_score.cv.sd;
    log_info("forward " + std::string(to_string(options.model)) + " step " +
             std::to_string(step + 1) + ": + " + std::string(to_string(record.predictor)));
    trace.steps.push_back(std::move(record));
  }
  return trace;
}

RankingResult recursive_forest_ranking(const Matrix& x, std::span<const double> y,
                                       const std::vector<Variable>& names,
                                       const forest::HyperParams& search_params,
                                       const forest::HyperParams& refit_params,
                                       const resample::FoldPlan& folds) {
  const std::size_t p = x.cols();
  if (p < 2) throw ConfigError("recursive ranking needs at least 2 predictors");
  if (names.size() != p) throw DataError("recursive ranking: name count mismatch");

  RankingResult result;
  std::vector<std::size_t> pool(p);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> ranked_worst_first;
  SelectionOptions options;
  options.model = ModelKind::Forest;
  options.forest_params = search_params;
  while (pool.size() > 1) {
    std::vector<Variable> pool_names;
    for (auto i : pool) pool_names.push_back(names[i]);
    const auto trace = forward_select(x.select_cols(pool), y, pool_names, options, folds);
    ++result.forward_runs;
    const Variable last = trace.steps.back().predictor;
    const auto it = std::find_if(pool.begin(), pool.end(),
                                 [&](std::size_t i) { return names[i] == last; });
    ranked_worst_first.push_back(*it);
    pool.erase(it);
    log_info("recursive ranking: rank " + std::to_string(pool.size() + 1) + " = " +
             std::string(to_string(last)));
  }
  std::vector<std::size_t> ranking{pool.front()};
  ranking.insert(ranking.end(), ranked_worst_first.rbegin(), ranked_worst_first.rend());

  auto& trace = result.trace;
  trace.model = ModelKind::Forest;
  trace.scoring = ScoringKind::CvRmse;
  trace.seed = search_params.seed;
  SelectionOptions refit;
  refit.model = ModelKind::Forest;
  refit.forest_params = refit_params;
  for (std::size_t k = 1; k <= ranking.size(); ++k) {
    std::vector<std::size_t> cols(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(cols.begin(), cols.end());
    std::vector<Variable> sub_names;
    for (auto i : cols) sub_names.push_back(names[i]);
    const auto s = score_subset(x.select_cols(cols), y, sub_names, refit, folds);
    SelectionStep step;
    step.predictor = names[ranking[k - 1]];
    step.score_mean = s.score_mean;
    step.score_sd = s.score_sd;
    step.rmse_mean = s.cv.mean;
    step.rmse_sd = s.cv.sd;
    trace.steps.push_back(std::move(step));
  }
  return result;
}

std::string trace_csv(const SelectionTrace& trace) {
  std::ostringstream out;
  out << "rank,predictor,score_mean,score_sd,rmse_mean,rmse_sd\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << i + 1 << ',' << to_string(s.predictor) << ','
        << format_double(s.score_mean) << ',' << format_double(s.score_sd) << ','
        << format_double(s.rmse_mean) << ',' << format_double(s.rmse_sd) << '\n';
  }
  return out.str();
}

void write_trace_csv(const SelectionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << trace_csv(trace);
}

}  // namespace softsensor::featsel
