#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "softsensor/error.hpp"
#include "softsensor/model_file.hpp"
#include "support.hpp"

using namespace softsensor;
using model_file::ModelFile;
using V = std::vector<double>;

namespace {

struct Fixture {
  Matrix x;
  V y;
  std::vector<Variable> names = {Variable::Flow, Variable::Turb, Variable::EC};
};

Fixture fixture() {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> z(0.0, 1.0);
  Fixture f;
  f.x = Matrix(150, 3);
  f.y.resize(150);
  for (std::size_t i = 0; i < 150; ++i) {
    f.x(i, 0) = std::exp(z(gen));
    f.x(i, 1) = std::exp(1 + z(gen));
    f.x(i, 2) = 500 + 100 * z(gen);
    f.y[i] = 0.1 + 0.02 * std::log(f.x(i, 0)) + 1e-4 * f.x(i, 2) + 0.01 * z(gen);
  }
  return f;
}

ModelFile linear_model(const Fixture& f) {
  ModelFile m;
  m.kind = featsel::ModelKind::Linear;
  m.target = Variable::TRP;
  m.predictors = f.names;
  m.transform.kinds[Variable::Flow] = preprocess::TransformKind::NaturalLog;
  m.transform.kinds[Variable::Turb] = preprocess::TransformKind::NaturalLog;
  m.linear = linear::fit_linear_pipeline(f.x, f.y, f.names, m.transform);
  m.metadata = {{"note", "unit test"}, {"values", {0.1, 1e-300, 3.0}}};
  return m;
}

ModelFile forest_model(const Fixture& f, int max_depth) {
  forest::HyperParams hp;
  hp.n_trees = 7;
  hp.max_depth = max_depth;
  hp.min_samples_leaf = 2;
  hp.feature_subset = forest::FeatureSubsetRule::Sqrt;
  hp.seed = 1234567890123456789ULL;
  ModelFile m;
  m.kind = featsel::ModelKind::Forest;
  m.target = Variable::NO3N;
  m.predictors = f.names;
  m.forest = forest::fit_forest(f.x, f.y, hp, f.names);
  return m;
}

void check_round_trip(const ModelFile& m, const Matrix& probe) {
  const std::string text = model_file::serialize(m);
  CHECK(text.back() == '\n');
  const ModelFile back = model_file::parse(text);
  CHECK(model_file::serialize(back) == text);
  CHECK(back.predictors == m.predictors);
  CHECK(back.transform == m.transform);
  if (m.linear) CHECK(*back.linear == *m.linear);
  if (m.forest) CHECK(*back.forest == *m.forest);
  const auto a = m.predict(probe);
  const auto b = back.predict(probe);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
  }
}

}  // namespace

TEST_CASE("linear model round-trips byte for byte") {
  const auto f = fixture();
  check_round_trip(linear_model(f), f.x);
}

TEST_CASE("forest model round-trips byte for byte") {
  const auto f = fixture();
  check_round_trip(forest_model(f, 5), f.x);
  const auto unlimited = forest_model(f, forest::kUnlimitedDepth);
  check_round_trip(unlimited, f.x);
  const auto j = nlohmann::json::parse(model_file::serialize(unlimited));
  CHECK(j.at("forest").at("hyperparams").at("max_depth").is_null());
  CHECK(j.at("forest").at("hyperparams").at("seed").get<std::uint64_t>() == 1234567890123456789ULL);
}

TEST_CASE("file save and load") {
  const auto f = fixture();
  const auto m = forest_model(f, 4);
  testing::TempDir dir("model");
  model_file::save(m, dir / "m.json");
  CHECK(testing::read_text(dir / "m.json") == model_file::serialize(m));
  CHECK(model_file::serialize(model_file::load(dir / "m.json")) == model_file::serialize(m));
  CHECK_THROWS_AS(model_file::load(dir / "absent.json"), DataError);
}

TEST_CASE("canonical layout") {
  const auto f = fixture();
  const auto text = model_file::serialize(linear_model(f));
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("format_version") == model_file::kFormatVersion);
  CHECK(j.at("kind") == "linear");
  CHECK(j.at("linear").at("coefficients").contains("EC"));
  CHECK(j.at("scaling").contains("Turb"));
  CHECK(j.at("transform").at("Flow") == "log");
  // Top-level keys appear in sorted order.
  CHECK(text.find("\"format_version\"") < text.find("\"kind\""));
  CHECK(text.find("\"kind\"") < text.find("\"linear\""));
  CHECK(text.find("\"metadata\"") < text.find("\"predictors\""));
  CHECK(text.find("1e-300") != std::string::npos);
}

TEST_CASE("malformed files are data errors") {
  const auto f = fixture();
  const auto good = nlohmann::json::parse(model_file::serialize(forest_model(f, 3)));

  CHECK_THROWS_AS(model_file::parse("{not json"), DataError);

  auto j = good;
  j["format_version"] = 99;
  CHECK_THROWS_WITH_AS(model_file::from_json(j), doctest::Contains("version"), DataError);

  j = good;
  j["kind"] = "linear";
  CHECK_THROWS_AS(model_file::from_json(j), DataError);

  j = good;
  j.erase("forest");
  CHECK_THROWS_AS(model_file::from_json(j), DataError);

  j = good;
  j["predictors"] = {"EC", "Nonsense"};
  CHECK_THROWS_AS(model_file::from_json(j), DataError);
}

TEST_CASE("prediction marks rows with a missing predictor") {
  const auto f = fixture();
  Matrix probe = f.x.select_rows(std::vector<std::size_t>{0, 1});
  probe(1, 2) = std::nan("");
  for (const auto& m : {linear_model(f), forest_model(f, 3)}) {
    const auto p = m.predict(probe);
    CHECK_FALSE(std::isnan(p[0]));
    CHECK(std::isnan(p[1]));
  }
}

TEST_CASE("sha256") {
  testing::TempDir dir("sha");
  testing::write_text(dir / "abc", "abc");
  CHECK(model_file::sha256_file(dir / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::write_text(dir / "empty", "");
  CHECK(model_file::sha256_file(dir / "empty") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
