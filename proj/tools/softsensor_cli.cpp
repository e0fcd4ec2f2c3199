// softsensor: command-line front end for the soft-sensor library.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "softsensor/config.hpp"
#include "softsensor/error.hpp"
#include "softsensor/log.hpp"
#include "softsensor/parallel.hpp"
#include "softsensor/pipeline.hpp"

namespace ss = softsensor;
namespace pl = softsensor::pipeline;

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out;
  std::string target;
  std::string predictors;
  std::string model_kind;
  std::vector<std::string> sets;
  int verbosity = 0;

  std::string model_file;
  std::string input;
  std::optional<std::size_t> rows;
  std::size_t tree = 0;
  int depth = -1;
  bool on_training = false;
  bool raw_correlation = false;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ss::ConfigError("cannot write " + path);
  f << text;
  if (!f) throw ss::ConfigError("write failed: " + path);
}

ss::config::RunConfig build_config(const Options& o) {
  auto cfg = ss::config::load(o.config_path, o.preset);
  ss::config::KeyValues kv;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ss::ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!o.data.empty()) kv["data.path"] = o.data;
  if (o.seed) kv["run.seed"] = std::to_string(*o.seed);
  if (!o.target.empty()) kv["run.target"] = o.target;
  if (!o.predictors.empty()) kv["run.predictors"] = o.predictors;
  if (!o.model_kind.empty()) kv["run.model"] = o.model_kind;
  if (o.rows) kv["run.plot_rows"] = std::to_string(*o.rows);
  if (o.raw_correlation) kv["run.correlation"] = "raw";
  ss::config::apply(cfg, kv);
  cfg.validate();
  return cfg;
}

ss::model_file::ModelFile load_model(const Options& o) {
  if (o.model_file.empty()) throw ss::ConfigError("--model-file is required");
  return ss::model_file::load(o.model_file);
}

int run(const std::string& command, const Options& o) {
  ss::set_thread_count(o.threads);
  if (o.verbosity >= 2) ss::set_log_level(ss::LogLevel::Debug);
  else if (o.verbosity == 1) ss::set_log_level(ss::LogLevel::Info);

  const auto cfg = build_config(o);

  if (command == "summary") {
    const auto r = pl::cmd_summary(cfg);
    if (!o.out.empty()) emit(pl::summary_csv(r, cfg.mapping), o.out);
    std::cout << pl::summary_table(r, cfg.mapping);
  } else if (command == "correlate") {
    emit(pl::correlation_csv(pl::cmd_correlate(cfg)), o.out);
  } else if (command == "split") {
    const auto target = cfg.require_target();
    const auto p = pl::prepare(cfg, target, cfg.resolved_predictors());
    std::ostringstream s;
    s << "row_index,role\n";
    std::vector<char> is_val(p.complete.n_rows(), 0);
    for (auto i : p.split.validation_indices) is_val[i] = 1;
    for (std::size_t i = 0; i < is_val.size(); ++i) {
      s << i << ',' << (is_val[i] ? "validation" : "working") << '\n';
    }
    emit(s.str(), o.out);
  } else if (command == "select") {
    const auto r = pl::cmd_select(cfg);
    emit(ss::featsel::trace_csv(r.trace), o.out);
  } else if (command == "train") {
    if (o.out.empty()) throw ss::ConfigError("train needs --out for the model file");
    const auto m = pl::cmd_train(cfg);
    ss::model_file::save(m, o.out);
  } else if (command == "evaluate") {
    const auto e = pl::cmd_evaluate(load_model(o), cfg, o.on_training);
    if (!o.out.empty()) {
      emit(ss::metrics::report_csv_header() + "\n" + ss::metrics::report_csv_row(e.report) + "\n",
           o.out);
    }
    std::cout << ss::metrics::report_table({e.report});
  } else if (command == "predict") {
    if (o.input.empty()) throw ss::ConfigError("predict needs --input");
    const auto m = load_model(o);
    const auto p = pl::cmd_predict(m, o.input);
    const auto& echo = m.metadata.value("config", nlohmann::json::object());
    emit(pl::prediction_csv(p, echo.value("data.timestamp_format", cfg.timestamp_format)), o.out);
    if (p.missing) std::cerr << p.missing << " prediction(s) missing\n";
  } else if (command == "export-plot") {
    emit(pl::plot_csv(pl::cmd_export_plot(load_model(o), cfg, cfg.plot_rows)), o.out);
  } else if (command == "flow-backup") {
    const auto entries = pl::cmd_flow_backup(cfg);
    std::ostringstream s;
    s << ss::metrics::report_csv_header() << '\n';
    std::vector<ss::metrics::EvaluationReport> reports;
    for (const auto& e : entries) {
      s << ss::metrics::report_csv_row(e.report) << '\n';
      reports.push_back(e.report);
    }
    if (!o.out.empty()) emit(s.str(), o.out);
    std::cout << ss::metrics::report_table(reports);
  } else if (command == "dump-tree") {
    const int depth = o.depth < 0 ? ss::forest::kUnlimitedDepth : o.depth;
    emit(pl::cmd_dump_tree(load_model(o), o.tree, depth), o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-sensor modelling of nutrient concentrations from surrogate sensors"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;

  app.add_option("-c,--config", o.config_path, "Run configuration file");
  app.add_option("--preset", o.preset, "Column set and transforms: enborne or cut")
      ->check(CLI::IsMember({"enborne", "cut"}));
  app.add_option("--data", o.data, "Input time-series CSV (overrides data.path)");
  app.add_option("--seed", o.seed, "Run seed");
  app.add_option("--threads", o.threads, "Worker threads, 0 = all cores")->capture_default_str();
  app.add_option("-o,--out", o.out, "Output file (default stdout)");
  app.add_option("--target", o.target, "Target variable");
  app.add_option("--predictors", o.predictors, "Comma-separated predictor list");
  app.add_option("--model", o.model_kind, "Model kind: linear or forest");
  app.add_option("--set", o.sets, "Extra config override key=value (repeatable)");
  app.add_flag("-v,--verbose", o.verbosity, "More logging (repeat for debug)");

  app.add_subcommand("summary", "Descriptive statistics of the complete-case rows");
  app.add_subcommand("correlate", "Rank surrogates by |r| against each target")
      ->add_flag("--raw", o.raw_correlation, "Use untransformed columns");
  app.add_subcommand("split", "Write the validation/working assignment");
  app.add_subcommand("select", "Forward or recursive predictor selection");
  app.add_subcommand("train", "Fit a model on the working split and save it");
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on its validation split");
  evaluate->add_option("-m,--model-file", o.model_file)->required();
  evaluate->add_flag("--on-training", o.on_training, "Score the training rows instead");
  auto* predict = app.add_subcommand("predict", "Predict the target for new rows");
  predict->add_option("-m,--model-file", o.model_file)->required();
  predict->add_option("-i,--input", o.input)->required();
  auto* plot = app.add_subcommand("export-plot", "Observed vs predicted for the first validation rows");
  plot->add_option("-m,--model-file", o.model_file)->required();
  plot->add_option("--rows", o.rows, "Number of rows (default run.plot_rows)");
  app.add_subcommand("flow-backup", "Forests using Flow alone and Flow plus one partner");
  auto* dump = app.add_subcommand("dump-tree", "Print one tree of a forest model");
  dump->add_option("-m,--model-file", o.model_file)->required();
  dump->add_option("--tree", o.tree, "Tree index")->capture_default_str();
  dump->add_option("--depth", o.depth, "Maximum depth to print (-1 = all)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const ss::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
