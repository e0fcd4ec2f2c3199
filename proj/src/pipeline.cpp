#include "softsensor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "softsensor/csv.hpp"
#include "softsensor/error.hpp"
#include "softsensor/linear.hpp"
#include "softsensor/log.hpp"
#include "softsensor/numeric.hpp"
#include "softsensor/rng.hpp"

namespace softsensor::pipeline {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void require_mapped(const config::RunConfig& cfg, Variable v) {
  if (!cfg.mapping.contains(v)) {
    throw ConfigError("variable " + std::string(to_string(v)) + " is not in the column mapping");
  }
}

std::vector<Variable> checked_predictors(const config::RunConfig& cfg, Variable target,
                                         std::vector<Variable> predictors) {
  if (predictors.empty()) predictors = cfg.resolved_predictors();
  std::sort(predictors.begin(), predictors.end());
  if (predictors.empty()) throw ConfigError("no predictors configured");
  for (Variable v : predictors) {
    if (v == target) {
      throw ConfigError("target " + std::string(to_string(v)) + " cannot be a predictor");
    }
    if (v == Variable::Timestamp) throw ConfigError("Timestamp cannot be a predictor");
    require_mapped(cfg, v);
  }
  return predictors;
}

resample::FoldPlan working_folds(const config::RunConfig& cfg, std::size_t n) {
  return resample::kfold_indices(n, cfg.k, derive_seed(cfg.seed, kFoldStream));
}

std::string descriptor(featsel::ModelKind kind, const std::vector<Variable>& predictors,
                       Variable target) {
  return std::string(featsel::to_string(kind)) + "[" + join_variables(predictors, "+") + "]->" +
         std::string(to_string(target));
}

json variables_json(const std::vector<Variable>& vars) {
  json a = json::array();
  for (Variable v : vars) a.push_back(std::string(to_string(v)));
  return a;
}

struct Replayed {
  dataio::Dataset rows;
  std::vector<std::int64_t> timestamps;
};

Replayed replay_rows(const model_file::ModelFile& model, const config::RunConfig& cfg,
                     bool on_training) {
  const auto& meta = model.metadata;
  if (!meta.contains("split")) throw DataError("model file has no split metadata");
  const auto& split_meta = meta.at("split");
  std::vector<Variable> required;
  for (const auto& v : split_meta.at("required")) {
    required.push_back(variable_from_string(v.get<std::string>()));
  }
  for (Variable v : required) require_mapped(cfg, v);

  const auto raw = dataio::load_timeseries(cfg.data_path, cfg.mapping, {cfg.timestamp_format});
  const std::string sha = model_file::sha256_file(cfg.data_path);
  if (meta.contains("dataset") && meta.at("dataset").value("sha256", "") != sha) {
    log_warning("dataset hash differs from the one the model was trained on");
  }
  const auto complete = dataio::drop_missing(raw, required);
  const auto split = resample::stratified_holdout(
      complete.column(model.target), split_meta.at("fraction").get<double>(),
      split_meta.at("n_bins").get<std::size_t>(), split_meta.at("seed").get<std::uint64_t>());
  Replayed out;
  out.rows = complete.select_rows(on_training ? split.working_indices : split.validation_indices);
  out.timestamps = out.rows.timestamps;
  return out;
}

}  // namespace

std::vector<Variable> required_columns(const config::RunConfig& cfg, Variable target,
                                       const std::vector<Variable>& predictors) {
  if (cfg.complete_case == config::CompleteCase::AllColumns) return cfg.mapping.variables();
  std::vector<Variable> req = predictors;
  req.push_back(target);
  std::sort(req.begin(), req.end());
  req.erase(std::unique(req.begin(), req.end()), req.end());
  return req;
}

Prepared prepare(const config::RunConfig& cfg, Variable target,
                 const std::vector<Variable>& predictors) {
  cfg.validate();
  cfg.mapping.validate(true);
  require_mapped(cfg, target);
  for (Variable v : predictors) require_mapped(cfg, v);
  Prepared p;
  p.target = target;
  p.raw = dataio::load_timeseries(cfg.data_path, cfg.mapping, {cfg.timestamp_format});
  p.required = required_columns(cfg, target, predictors);
  p.complete = dataio::drop_missing(p.raw, p.required);
  log_info(std::to_string(p.raw.n_rows()) + " records, " + std::to_string(p.complete.n_rows()) +
           " complete");
  p.split = resample::stratified_holdout(p.complete.column(target), cfg.validation_fraction,
                                         cfg.n_bins, derive_seed(cfg.seed, kSplitStream));
  p.dataset_sha256 = model_file::sha256_file(cfg.data_path);
  return p;
}

SummaryResult cmd_summary(const config::RunConfig& cfg) {
  cfg.mapping.validate(false);
  if (cfg.mapping.variables().empty()) throw ConfigError("column mapping binds no variables");
  const auto raw = dataio::load_timeseries(cfg.data_path, cfg.mapping, {cfg.timestamp_format});
  std::vector<Variable> required = cfg.mapping.variables();
  if (cfg.complete_case == config::CompleteCase::ModelColumns && cfg.target) {
    required = required_columns(cfg, *cfg.target, checked_predictors(cfg, *cfg.target, {}));
  }
  auto complete = dataio::drop_missing(raw, required);
  for (auto it = complete.columns.begin(); it != complete.columns.end();) {
    if (std::find(required.begin(), required.end(), it->first) == required.end()) {
      it = complete.columns.erase(it);
    } else {
      ++it;
    }
  }
  SummaryResult r;
  r.raw_rows = raw.n_rows();
  r.complete_rows = complete.n_rows();
  r.stats = dataio::summarize(complete);
  return r;
}

std::string summary_csv(const SummaryResult& r, const dataio::ColumnMapping& mapping) {
  std::ostringstream out;
  out << "variable,unit,n,mean,sd,min,max\n";
  for (const auto& [v, s] : r.stats) {
    const std::string unit = mapping.contains(v) ? mapping.at(v).unit : "";
    out << to_string(v) << ',' << csv::escape(unit) << ',' << s.n << ',' << format_double(s.mean) << ','
        << format_double(s.sd) << ',' << format_double(s.min) << ',' << format_double(s.max) << '\n';
  }
  return out.str();
}

std::string summary_table(const SummaryResult& r, const dataio::ColumnMapping& mapping) {
  std::ostringstream out;
  out << "records: " << r.raw_rows << " raw, " << r.complete_rows << " complete\n";
  out << "parameter  unit        mean +- sd              min        max\n";
  for (const auto& [v, s] : r.stats) {
    std::string name(to_string(v));
    std::string unit = mapping.contains(v) ? mapping.at(v).unit : "";
    name.resize(std::max<std::size_t>(name.size(), 11), ' ');
    unit.resize(std::max<std::size_t>(unit.size(), 12), ' ');
    std::string ms = fixed(s.mean, 2) + " +- " + fixed(s.sd, 2);
    ms.resize(std::max<std::size_t>(ms.size(), 24), ' ');
    std::string lo = fixed(s.min, 2);
    lo.resize(std::max<std::size_t>(lo.size(), 11), ' ');
    out << name << unit << ms << lo << fixed(s.max, 2) << '\n';
  }
  return out.str();
}

std::vector<CorrelationResult> cmd_correlate(const config::RunConfig& cfg) {
  cfg.mapping.validate(true);
  std::vector<Variable> targets;
  if (cfg.target) {
    require_mapped(cfg, *cfg.target);
    targets.push_back(*cfg.target);
  } else {
    for (Variable v : cfg.mapping.variables()) {
      if (is_target(v)) targets.push_back(v);
    }
  }
  const auto raw = dataio::load_timeseries(cfg.data_path, cfg.mapping, {cfg.timestamp_format});
  std::vector<CorrelationResult> results;
  for (Variable target : targets) {
    std::vector<Variable> preds;
    if (cfg.predictors.empty()) {
      for (Variable v : cfg.mapping.variables()) {
        if (is_surrogate(v)) preds.push_back(v);
      }
    } else {
      preds = cfg.predictors;
      for (Variable v : preds) require_mapped(cfg, v);
    }
    const auto complete = dataio::drop_missing(raw, required_columns(cfg, target, preds));
    auto data = complete;
    if (!cfg.correlate_raw) {
      data = preprocess::apply_transform(complete, cfg.transform_for(complete, preds));
    }
    results.push_back({target, preprocess::correlation_table(data, target, preds)});
  }
  return results;
}

std::string correlation_csv(const std::vector<CorrelationResult>& results) {
  std::ostringstream out;
  out << "target,rank,predictor,r\n";
  for (const auto& res : results) {
    for (std::size_t i = 0; i < res.ranking.size(); ++i) {
      out << to_string(res.target) << ',' << i + 1 << ',' << to_string(res.ranking[i].predictor)
          << ',' << format_double(res.ranking[i].r) << '\n';
    }
  }
  return out.str();
}

ForestTuning tune_forest(const config::RunConfig& cfg, const Matrix& x,
                         std::span<const double> y, const resample::FoldPlan& folds) {
  ForestTuning t;
  const std::uint64_t forest_seed = derive_seed(cfg.seed, kForestStream);
  if (cfg.tune) {
    t.grid = forest::grid_search(x, y, cfg.grid, folds, cfg.search_n_trees, forest_seed);
    t.params = t.grid->best;
    log_info("grid search: " + std::to_string(t.grid->table.size()) + " combinations, " +
             std::to_string(t.grid->fits) + " fits; best " + t.params.describe());
  } else {
    t.params = cfg.fixed_params();
    t.params.seed = forest_seed;
  }
  if (cfg.tree_candidates.size() > 1) {
    t.tree_count = forest::select_n_trees(x, y, t.params, cfg.tree_candidates,
                                          cfg.tree_threshold, folds);
    t.params.n_trees = t.tree_count->n_trees;
  } else {
    t.params.n_trees = cfg.tree_candidates.front();
  }
  return t;
}

SelectResult cmd_select(const config::RunConfig& cfg) {
  const Variable target = cfg.require_target();
  const auto predictors = checked_predictors(cfg, target, {});
  const auto prep = prepare(cfg, target, predictors);
  const auto working = prep.working();
  const Matrix x = working.matrix(predictors);
  const auto y = working.column(target);
  const auto folds = working_folds(cfg, working.n_rows());
  if (cfg.max_k > predictors.size()) {
    throw ConfigError("run.max_k exceeds the number of predictors");
  }

  SelectResult result;
  if (cfg.model == featsel::ModelKind::Linear) {
    featsel::SelectionOptions options;
    options.model = featsel::ModelKind::Linear;
    options.max_k = cfg.max_k;
    options.transform = cfg.transform_for(working, predictors);
    result.trace = featsel::forward_select(x, y, predictors, options, folds);
    result.forward_runs = 1;
    return result;
  }

  result.tuning = tune_forest(cfg, x, y, folds);
  forest::HyperParams search = result.tuning->params;
  search.n_trees = cfg.search_n_trees;
  if (cfg.forest_selection == config::ForestSelection::Forward || predictors.size() < 2) {
    featsel::SelectionOptions options;
    options.model = featsel::ModelKind::Forest;
    options.max_k = cfg.max_k;
    options.forest_params = search;
    result.trace = featsel::forward_select(x, y, predictors, options, folds);
    result.forward_runs = 1;
  } else {
    auto ranking = featsel::recursive_forest_ranking(x, y, predictors, search,
                                                     result.tuning->params, folds);
    result.trace = std::move(ranking.trace);
    result.forward_runs = ranking.forward_runs;
    if (cfg.max_k > 0) result.trace.steps.resize(cfg.max_k);
  }
  return result;
}

model_file::ModelFile cmd_train(const config::RunConfig& cfg,
                                const std::vector<Variable>& requested) {
  const Variable target = cfg.require_target();
  const auto predictors = checked_predictors(cfg, target, requested);
  const auto prep = prepare(cfg, target, predictors);
  const auto working = prep.working();
  const Matrix x = working.matrix(predictors);
  const auto y = working.column(target);

  model_file::ModelFile m;
  m.kind = cfg.model;
  m.target = target;
  m.predictors = predictors;

  json tuning = json::object();
  if (cfg.model == featsel::ModelKind::Linear) {
    m.transform = cfg.transform_for(working, predictors);
    m.linear = linear::fit_linear_pipeline(x, y, predictors, m.transform);
  } else {
    const auto folds = working_folds(cfg, working.n_rows());
    const auto t = tune_forest(cfg, x, y, folds);
    m.forest = forest::fit_forest(x, y, t.params, predictors);
    if (t.grid) {
      tuning["grid_combinations"] = t.grid->table.size();
      tuning["grid_fits"] = t.grid->fits;
      const auto best = std::find_if(t.grid->table.begin(), t.grid->table.end(),
                                     [&](const forest::GridEntry& e) { return e.params == t.grid->best; });
      tuning["grid_best_cv_rmse"] = best->score.mean;
    }
    if (t.tree_count) {
      tuning["tree_count"] = {{"candidates", t.tree_count->candidates},
                              {"cv_rmse", t.tree_count->cv_rmse},
                              {"chosen", t.tree_count->n_trees},
                              {"threshold", cfg.tree_threshold}};
    }
  }

  json config_echo = json::object();
  for (const auto& [k, v] : cfg.echo()) config_echo[k] = v;
  m.metadata = {
      {"dataset",
       {{"sha256", prep.dataset_sha256},
        {"path", cfg.data_path.filename().string()},
        {"raw_rows", prep.raw.n_rows()},
        {"complete_rows", prep.complete.n_rows()}}},
      {"training",
       {{"rows", working.n_rows()},
        {"first_timestamp", dataio::format_timestamp(working.timestamps.front(), cfg.timestamp_format)},
        {"last_timestamp", dataio::format_timestamp(working.timestamps.back(), cfg.timestamp_format)}}},
      {"split",
       {{"seed", prep.split.seed},
        {"fraction", prep.split.fraction},
        {"n_bins", prep.split.n_bins},
        {"validation_rows", prep.split.validation_indices.size()},
        {"required", variables_json(prep.required)}}},
      {"config", config_echo},
      {"tuning", tuning},
  };
  return m;
}

Evaluation cmd_evaluate(const model_file::ModelFile& model, const config::RunConfig& cfg,
                        bool on_training) {
  if (on_training) {
    log_warning("evaluating on the training split; scores are optimistic");
  }
  const auto replayed = replay_rows(model, cfg, on_training);
  Evaluation e;
  e.on_training_rows = on_training;
  e.timestamps = replayed.timestamps;
  const auto y = replayed.rows.column(model.target);
  e.observed.assign(y.begin(), y.end());
  e.predicted = model.predict(replayed.rows.matrix(model.predictors));
  e.report = metrics::evaluate(e.observed, e.predicted,
                               descriptor(model.kind, model.predictors, model.target));
  return e;
}

Prediction cmd_predict(const model_file::ModelFile& model, const std::filesystem::path& input,
                       const std::optional<dataio::ColumnMapping>& mapping) {
  dataio::ColumnMapping map;
  std::string format = dataio::LoadOptions{}.timestamp_format;
  const json cfg_echo = model.metadata.value("config", json::object());
  format = cfg_echo.value("data.timestamp_format", format);
  std::vector<Variable> wanted = model.predictors;
  wanted.insert(wanted.begin(), Variable::Timestamp);
  for (Variable v : wanted) {
    if (mapping) {
      map.add(mapping->at(v));
      continue;
    }
    const std::string key = "columns." + std::string(to_string(v));
    std::string header(to_string(v));
    std::string unit;
    if (cfg_echo.contains(key)) {
      const auto value = cfg_echo.at(key).get<std::string>();
      const auto bar = value.find(" | ");
      header = value.substr(0, bar);
      if (bar != std::string::npos) unit = value.substr(bar + 3);
    }
    map.add({v, header, unit});
  }
  const auto data = dataio::load_timeseries(input, map, {format});
  Prediction p;
  p.timestamps = data.timestamps;
  p.values = model.predict(data.matrix(model.predictors));
  p.missing = static_cast<std::size_t>(
      std::count_if(p.values.begin(), p.values.end(), [](double v) { return std::isnan(v); }));
  if (p.missing) {
    log_warning(std::to_string(p.missing) + " row(s) lack a predictor value; marked NaN");
  }
  return p;
}

std::string prediction_csv(const Prediction& p, const std::string& timestamp_format) {
  std::ostringstream out;
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    out << dataio::format_timestamp(p.timestamps[i], timestamp_format) << ',' << format_double(p.values[i])
        << '\n';
  }
  return out.str();
}

std::vector<PlotRow> cmd_export_plot(const model_file::ModelFile& model,
                                     const config::RunConfig& cfg, std::size_t rows) {
  const auto e = cmd_evaluate(model, cfg);
  std::vector<PlotRow> out;
  const std::size_t n = std::min(rows, e.observed.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({i, e.timestamps[i], e.observed[i], e.predicted[i]});
  }
  return out;
}

std::string plot_csv(const std::vector<PlotRow>& rows) {
  std::ostringstream out;
  out << "index,observed,predicted\n";
  for (const auto& r : rows) {
    out << r.index << ',' << format_double(r.observed) << ',' << format_double(r.predicted) << '\n';
  }
  return out.str();
}

std::vector<FlowBackupEntry> cmd_flow_backup(const config::RunConfig& cfg) {
  const Variable target = cfg.require_target();
  require_mapped(cfg, Variable::Flow);
  const auto all_predictors = checked_predictors(cfg, target, {});
  const auto prep = prepare(cfg, target, all_predictors);
  const auto working = prep.working();
  const auto validation = prep.validation();

  Variable partner;
  if (cfg.flow_partner) {
    partner = *cfg.flow_partner;
    require_mapped(cfg, partner);
  } else {
    std::vector<Variable> others;
    for (Variable v : all_predictors) {
      if (v != Variable::Flow) others.push_back(v);
    }
    if (others.empty()) throw ConfigError("flow backup needs a surrogate besides Flow");
    partner = preprocess::correlation_table(working, target, others).front().predictor;
  }
  if (partner == Variable::Flow || partner == target) {
    throw ConfigError("flow partner must be a surrogate other than Flow");
  }

  std::vector<std::vector<Variable>> sets = {{Variable::Flow}, {Variable::Flow, partner}};
  std::sort(sets[1].begin(), sets[1].end());
  const auto folds = working_folds(cfg, working.n_rows());
  const auto y = working.column(target);
  const auto vy = validation.column(target);
  std::vector<FlowBackupEntry> out;
  for (const auto& set : sets) {
    const Matrix x = working.matrix(set);
    const auto t = tune_forest(cfg, x, y, folds);
    const auto model = forest::fit_forest(x, y, t.params, set);
    const auto pred = forest::predict_forest(model, validation.matrix(set));
    out.push_back({set, metrics::evaluate(vy, pred, descriptor(featsel::ModelKind::Forest, set, target)),
                   t.params});
  }
  return out;
}

std::string cmd_dump_tree(const model_file::ModelFile& model, std::size_t tree_index,
                          int max_depth) {
  if (model.kind != featsel::ModelKind::Forest || !model.forest) {
    throw ConfigError("dump-tree needs a forest model");
  }
  if (tree_index >= model.forest->trees.size()) {
    throw ConfigError("tree index " + std::to_string(tree_index) + " out of range (forest has " +
                      std::to_string(model.forest->trees.size()) + " trees)");
  }
  return forest::dump_tree(model.forest->trees[tree_index], model.predictors, max_depth);
}

}  // namespace softsensor::pipeline
