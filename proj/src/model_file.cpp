#include "softsensor/model_file.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "softsensor/error.hpp"

namespace softsensor::model_file {

using nlohmann::json;

namespace {

json node_to_json(const forest::Tree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  json j;
  j["value"] = n.value;
  j["n"] = n.n_samples;
  j["mse"] = n.mse;
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(t, static_cast<std::size_t>(n.left));
    j["right"] = node_to_json(t, static_cast<std::size_t>(n.right));
  }
  return j;
}

void node_from_json(const json& j, forest::Tree& t, std::size_t n_features) {
  const auto index = t.nodes.size();
  forest::TreeNode node;
  node.value = j.at("value").get<double>();
  node.n_samples = j.at("n").get<std::size_t>();
  node.mse = j.at("mse").get<double>();
  t.nodes.push_back(node);
  if (!j.contains("feature")) return;
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
    throw DataError("model file: tree references feature " + std::to_string(feature) +
                    " outside the predictor list");
  }
  t.nodes[index].feature = feature;
  t.nodes[index].threshold = j.at("threshold").get<double>();
  t.nodes[index].left = static_cast<std::int32_t>(t.nodes.size());
  node_from_json(j.at("left"), t, n_features);
  t.nodes[index].right = static_cast<std::int32_t>(t.nodes.size());
  node_from_json(j.at("right"), t, n_features);
}

json hyperparams_to_json(const forest::HyperParams& hp) {
  json j;
  j["bootstrap"] = hp.bootstrap;
  j["feature_subset"] = std::string(forest::to_string(hp.feature_subset));
  j["max_depth"] = hp.max_depth == forest::kUnlimitedDepth ? json(nullptr) : json(hp.max_depth);
  j["min_samples_split"] = hp.min_samples_split;
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["n_trees"] = hp.n_trees;
  j["seed"] = hp.seed;
  return j;
}

forest::HyperParams hyperparams_from_json(const json& j) {
  forest::HyperParams hp;
  hp.bootstrap = j.at("bootstrap").get<bool>();
  hp.feature_subset =
      forest::feature_subset_rule_from_string(j.at("feature_subset").get<std::string>());
  hp.max_depth =
      j.at("max_depth").is_null() ? forest::kUnlimitedDepth : j.at("max_depth").get<int>();
  hp.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  hp.n_trees = j.at("n_trees").get<std::size_t>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  return hp;
}

}  // namespace

std::vector<double> ModelFile::predict(const Matrix& rows) const {
  if (kind == featsel::ModelKind::Linear) return linear::predict_linear(*linear, rows);
  return forest::predict_forest(*forest, rows);
}

json to_json(const ModelFile& m) {
  json j;
  j["format_version"] = m.format_version;
  j["kind"] = std::string(featsel::to_string(m.kind));
  j["target"] = std::string(to_string(m.target));
  j["predictors"] = json::array();
  for (Variable v : m.predictors) j["predictors"].push_back(std::string(to_string(v)));
  j["transform"] = json::object();
  for (Variable v : m.predictors) {
    j["transform"][std::string(to_string(v))] =
        std::string(preprocess::to_string(m.transform.kind(v)));
  }
  if (m.kind == featsel::ModelKind::Linear) {
    if (!m.linear) throw DataError("linear model file without coefficients");
    const auto& lin = *m.linear;
    json coef = json::object();
    json scaling = json::object();
    for (std::size_t i = 0; i < m.predictors.size(); ++i) {
      const std::string name(to_string(m.predictors[i]));
      coef[name] = lin.coefficients.at(i);
      scaling[name] = {{"mean", lin.scaling.columns.at(i).mean},
                       {"sd", lin.scaling.columns.at(i).sd}};
    }
    j["linear"] = {{"intercept", lin.intercept}, {"coefficients", coef}};
    j["scaling"] = scaling;
  } else {
    if (!m.forest) throw DataError("forest model file without trees");
    json trees = json::array();
    for (const auto& t : m.forest->trees) trees.push_back(node_to_json(t, 0));
    j["forest"] = {{"hyperparams", hyperparams_to_json(m.forest->hyperparams)},
                   {"trees", trees}};
  }
  j["metadata"] = m.metadata;
  return j;
}

ModelFile from_json(const json& j) {
  try {
    ModelFile m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw DataError("unsupported model file format_version " +
                      std::to_string(m.format_version));
    }
    m.kind = featsel::model_kind_from_string(j.at("kind").get<std::string>());
    m.target = variable_from_string(j.at("target").get<std::string>());
    for (const auto& p : j.at("predictors")) {
      m.predictors.push_back(variable_from_string(p.get<std::string>()));
    }
    for (const auto& [name, kind] : j.at("transform").items()) {
      const auto k = preprocess::transform_kind_from_string(kind.get<std::string>());
      if (k != preprocess::TransformKind::Identity) {
        m.transform.kinds[variable_from_string(name)] = k;
      }
    }
    if (m.kind == featsel::ModelKind::Linear) {
      if (j.contains("forest")) throw DataError("linear model file carries a forest payload");
      linear::LinearModel lin;
      lin.predictor_names = m.predictors;
      lin.intercept = j.at("linear").at("intercept").get<double>();
      for (Variable v : m.predictors) {
        const std::string name(to_string(v));
        lin.coefficients.push_back(j.at("linear").at("coefficients").at(name).get<double>());
        const auto& s = j.at("scaling").at(name);
        lin.scaling.columns.push_back({s.at("mean").get<double>(), s.at("sd").get<double>()});
      }
      lin.transform = m.transform;
      m.linear = std::move(lin);
    } else {
      if (j.contains("linear")) throw DataError("forest model file carries linear coefficients");
      forest::ForestModel f;
      f.hyperparams = hyperparams_from_json(j.at("forest").at("hyperparams"));
      f.predictor_names = m.predictors;
      for (const auto& tj : j.at("forest").at("trees")) {
        forest::Tree t;
        node_from_json(tj, t, m.predictors.size());
        f.trees.push_back(std::move(t));
      }
      if (f.trees.size() != f.hyperparams.n_trees) {
        throw DataError("model file lists " + std::to_string(f.trees.size()) +
                        " trees but n_trees = " + std::to_string(f.hyperparams.n_trees));
      }
      m.forest = std::move(f);
    }
    m.metadata = j.value("metadata", json::object());
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

std::string serialize(const ModelFile& m) { return to_json(m).dump(2) + "\n"; }

ModelFile parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

void save(const ModelFile& m, const std::filesystem::path& path) {
  const std::string text = serialize(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path.string() + "'");
  out << text;
}

ModelFile load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace softsensor::model_file
