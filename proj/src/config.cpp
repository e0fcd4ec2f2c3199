#include "softsensor/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "softsensor/error.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::config {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, bool>) {
      out += values[i] ? "true" : "false";
    } else if constexpr (std::is_same_v<T, forest::FeatureSubsetRule>) {
      out += forest::to_string(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "True" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "False" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "': expected true/false, got '" + v + "'");
}

int parse_depth(const std::string& key, const std::string& v) {
  if (v == "none" || v == "None" || v == "inf") return forest::kUnlimitedDepth;
  const auto d = parse_uint(key, v);
  if (d < 1 || d > static_cast<std::uint64_t>(forest::kUnlimitedDepth)) {
    throw ConfigError("'" + key + "': depth must be >= 1");
  }
  return static_cast<int>(d);
}

std::string depth_string(int d) {
  return d == forest::kUnlimitedDepth ? std::string("none") : std::to_string(d);
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + full + "'");
    }
    kv[full] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_key_values(in, path.string());
}

Variable RunConfig::require_target() const {
  if (!target) throw ConfigError("no target variable configured (run.target)");
  return *target;
}

std::vector<Variable> RunConfig::resolved_predictors() const {
  std::vector<Variable> out;
  if (predictors.empty()) {
    for (Variable v : mapping.variables()) {
      if (is_surrogate(v)) out.push_back(v);
    }
  } else {
    out = predictors;
  }
  if (target) out.erase(std::remove(out.begin(), out.end(), *target), out.end());
  std::sort(out.begin(), out.end());
  return out;
}

preprocess::TransformSpec RunConfig::transform_for(const dataio::Dataset& working,
                                                   const std::vector<Variable>& preds) const {
  preprocess::TransformSpec spec;
  switch (transform_mode) {
    case TransformMode::Preset: spec = preset_transform; break;
    case TransformMode::Auto: spec = preprocess::suggest_transforms(working, skew_threshold, preds); break;
    case TransformMode::None: break;
  }
  for (const auto& [v, kind] : transform_overrides.kinds) spec.kinds[v] = kind;
  preprocess::TransformSpec out;
  for (Variable v : preds) {
    const auto kind = spec.kind(v);
    if (kind != preprocess::TransformKind::Identity) out.kinds[v] = kind;
  }
  return out;
}

forest::HyperParams RunConfig::fixed_params() const {
  forest::HyperParams hp;
  hp.bootstrap = grid.bootstrap.front();
  hp.feature_subset = grid.feature_subset.front();
  hp.max_depth = grid.max_depth.front();
  hp.min_samples_split = grid.min_samples_split.front();
  hp.min_samples_leaf = grid.min_samples_leaf.front();
  hp.n_trees = tree_candidates.back();
  hp.seed = seed;
  return hp;
}

void RunConfig::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("run.validation_fraction must lie in (0, 1)");
  }
  if (n_bins < 2) throw ConfigError("run.n_bins must be >= 2");
  if (k < 2) throw ConfigError("run.k must be >= 2");
  if (target && std::find(predictors.begin(), predictors.end(), *target) != predictors.end()) {
    throw ConfigError("target " + std::string(to_string(*target)) + " is listed as a predictor");
  }
  if (grid.size() == 0) throw ConfigError("forest grid has an empty value list");
  if (tree_candidates.empty()) throw ConfigError("forest.n_trees needs at least one value");
  for (std::size_t i = 1; i < tree_candidates.size(); ++i) {
    if (tree_candidates[i] <= tree_candidates[i - 1]) {
      throw ConfigError("forest.n_trees must be strictly increasing");
    }
  }
  if (!(skew_threshold > 0.0)) throw ConfigError("transform.skew_threshold must be positive");
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::map<std::string, std::string> out;
  out["data.path"] = data_path.string();
  out["data.timestamp_format"] = timestamp_format;
  out["data.complete_case"] = complete_case == CompleteCase::AllColumns ? "all" : "model";
  for (const auto& b : mapping.bindings()) {
    out["columns." + std::string(to_string(b.canonical))] =
        b.unit.empty() ? b.source_header : b.source_header + " | " + b.unit;
  }
  out["run.target"] = target ? std::string(to_string(*target)) : "";
  out["run.predictors"] = join_variables(predictors);
  out["run.model"] = std::string(featsel::to_string(model));
  out["run.seed"] = std::to_string(seed);
  out["run.validation_fraction"] = format_double(validation_fraction);
  out["run.n_bins"] = std::to_string(n_bins);
  out["run.k"] = std::to_string(k);
  out["run.max_k"] = std::to_string(max_k);
  out["run.correlation"] = correlate_raw ? "raw" : "transformed";
  out["run.plot_rows"] = std::to_string(plot_rows);
  out["run.flow_partner"] = flow_partner ? std::string(to_string(*flow_partner)) : "";
  out["transform.mode"] = transform_mode == TransformMode::Preset ? "preset"
                          : transform_mode == TransformMode::Auto ? "auto"
                                                                  : "none";
  out["transform.skew_threshold"] = format_double(skew_threshold);
  for (const auto& [v, kind] : preset_transform.kinds) {
    out["transform.preset." + std::string(to_string(v))] = std::string(preprocess::to_string(kind));
  }
  for (const auto& [v, kind] : transform_overrides.kinds) {
    out["transform." + std::string(to_string(v))] = std::string(preprocess::to_string(kind));
  }
  out["forest.tune"] = tune ? "true" : "false";
  out["forest.search_n_trees"] = std::to_string(search_n_trees);
  out["forest.bootstrap"] = join(grid.bootstrap);
  out["forest.feature_subset"] = join(grid.feature_subset);
  std::string depths;
  for (std::size_t i = 0; i < grid.max_depth.size(); ++i) {
    if (i) depths += ',';
    depths += depth_string(grid.max_depth[i]);
  }
  out["forest.max_depth"] = depths;
  out["forest.min_samples_split"] = join(grid.min_samples_split);
  out["forest.min_samples_leaf"] = join(grid.min_samples_leaf);
  out["forest.n_trees"] = join(tree_candidates);
  out["forest.tree_threshold"] = format_double(tree_threshold);
  out["forest.selection"] = forest_selection == ForestSelection::Recursive ? "recursive" : "forward";
  return {out.begin(), out.end()};
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  using preprocess::TransformKind;
  std::vector<std::pair<Variable, std::string>> units = {
      {Variable::Flow, "m3 s-1"}, {Variable::Temp, "degC"},  {Variable::pH, "-"},
      {Variable::DOsat, "%"},     {Variable::Turb, "NTU"},   {Variable::EC, "uS cm-1"},
      {Variable::Chl, "ug L-1"}};
  std::vector<Variable> targets;
  if (name == "enborne") {
    targets = {Variable::TRP, Variable::NO3N};
    c.preset_transform.kinds = {{Variable::Turb, TransformKind::NaturalLog},
                                {Variable::Chl, TransformKind::NaturalLog},
                                {Variable::DOsat, TransformKind::NaturalLog},
                                {Variable::Flow, TransformKind::NaturalLog}};
  } else if (name == "cut") {
    targets = {Variable::TRP, Variable::TP, Variable::NH4N};
    c.preset_transform.kinds = {{Variable::Turb, TransformKind::NaturalLog},
                                {Variable::Chl, TransformKind::NaturalLog},
                                {Variable::Flow, TransformKind::NaturalLog},
                                {Variable::EC, TransformKind::Cube}};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected enborne or cut)");
  }
  c.transform_mode = TransformMode::Preset;
  c.mapping.add({Variable::Timestamp, "Timestamp", ""});
  for (const auto& [v, unit] : units) c.mapping.add({v, std::string(to_string(v)), unit});
  for (Variable t : targets) {
    c.mapping.add({t, std::string(to_string(t)), t == Variable::NO3N || t == Variable::NH4N
                                                      ? "mg N L-1"
                                                      : "mg P L-1"});
  }
  c.target = targets.front();
  return c;
}

void apply(RunConfig& c, const KeyValues& kv) {
  bool columns_reset = false;
  for (const auto& [key, value] : kv) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section == "columns") {
      if (!columns_reset) {
        c.mapping = dataio::ColumnMapping();
        columns_reset = true;
      }
      const auto bar = value.find('|');
      c.mapping.add({variable_from_string(name), trim(value.substr(0, bar)),
                     bar == std::string::npos ? "" : trim(value.substr(bar + 1))});
    } else if (key == "data.path") {
      c.data_path = value;
    } else if (key == "data.timestamp_format") {
      c.timestamp_format = value;
    } else if (key == "data.complete_case") {
      if (value == "all") c.complete_case = CompleteCase::AllColumns;
      else if (value == "model") c.complete_case = CompleteCase::ModelColumns;
      else throw ConfigError("data.complete_case must be 'all' or 'model'");
    } else if (key == "run.target") {
      c.target = value.empty() ? std::nullopt : std::optional(variable_from_string(value));
    } else if (key == "run.predictors") {
      c.predictors = parse_variable_list(value);
    } else if (key == "run.model") {
      c.model = featsel::model_kind_from_string(value);
    } else if (key == "run.seed") {
      c.seed = parse_uint(key, value);
    } else if (key == "run.validation_fraction") {
      c.validation_fraction = parse_double(key, value);
    } else if (key == "run.n_bins") {
      c.n_bins = parse_uint(key, value);
    } else if (key == "run.k") {
      c.k = parse_uint(key, value);
    } else if (key == "run.max_k") {
      c.max_k = parse_uint(key, value);
    } else if (key == "run.correlation") {
      if (value != "raw" && value != "transformed") {
        throw ConfigError("run.correlation must be 'raw' or 'transformed'");
      }
      c.correlate_raw = value == "raw";
    } else if (key == "run.plot_rows") {
      c.plot_rows = parse_uint(key, value);
    } else if (key == "run.flow_partner") {
      c.flow_partner = value.empty() ? std::nullopt : std::optional(variable_from_string(value));
    } else if (key == "transform.mode") {
      if (value == "preset") c.transform_mode = TransformMode::Preset;
      else if (value == "auto") c.transform_mode = TransformMode::Auto;
      else if (value == "none") c.transform_mode = TransformMode::None;
      else throw ConfigError("transform.mode must be preset, auto or none");
    } else if (key == "transform.skew_threshold") {
      c.skew_threshold = parse_double(key, value);
    } else if (section == "transform" && name.rfind("preset.", 0) == 0) {
      c.preset_transform.kinds[variable_from_string(name.substr(7))] =
          preprocess::transform_kind_from_string(value);
    } else if (section == "transform") {
      c.transform_overrides.kinds[variable_from_string(name)] =
          preprocess::transform_kind_from_string(value);
    } else if (key == "forest.tune") {
      c.tune = parse_bool(key, value);
    } else if (key == "forest.search_n_trees") {
      c.search_n_trees = parse_uint(key, value);
    } else if (key == "forest.bootstrap") {
      c.grid.bootstrap.clear();
      for (const auto& v : split_list(value)) c.grid.bootstrap.push_back(parse_bool(key, v));
    } else if (key == "forest.feature_subset") {
      c.grid.feature_subset.clear();
      for (const auto& v : split_list(value)) {
        c.grid.feature_subset.push_back(forest::feature_subset_rule_from_string(v));
      }
    } else if (key == "forest.max_depth") {
      c.grid.max_depth.clear();
      for (const auto& v : split_list(value)) c.grid.max_depth.push_back(parse_depth(key, v));
    } else if (key == "forest.min_samples_split") {
      c.grid.min_samples_split.clear();
      for (const auto& v : split_list(value)) c.grid.min_samples_split.push_back(parse_uint(key, v));
    } else if (key == "forest.min_samples_leaf") {
      c.grid.min_samples_leaf.clear();
      for (const auto& v : split_list(value)) c.grid.min_samples_leaf.push_back(parse_uint(key, v));
    } else if (key == "forest.n_trees") {
      c.tree_candidates.clear();
      for (const auto& v : split_list(value)) c.tree_candidates.push_back(parse_uint(key, v));
    } else if (key == "forest.tree_threshold") {
      c.tree_threshold = parse_double(key, value);
    } else if (key == "forest.selection") {
      if (value == "recursive") c.forest_selection = ForestSelection::Recursive;
      else if (value == "forward") c.forest_selection = ForestSelection::Forward;
      else throw ConfigError("forest.selection must be 'recursive' or 'forward'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

RunConfig load(const std::filesystem::path& path, const std::string& preset_name) {
  RunConfig c = preset_name.empty() ? RunConfig{} : preset(preset_name);
  if (!path.empty()) {
    const auto kv = read_key_values(path);
    apply(c, kv);
    if (c.data_path.is_relative() && !c.data_path.empty()) {
      c.data_path = path.parent_path() / c.data_path;
    }
  }
  return c;
}

}  // namespace softsensor::config
