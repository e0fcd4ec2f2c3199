#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "softsensor/error.hpp"
#include "softsensor/forest.hpp"
#include "softsensor/parallel.hpp"
#include "support.hpp"

using namespace softsensor;
using forest::HyperParams;
using V = std::vector<double>;

namespace {

struct OracleSplit {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

double sse(const V& v) {
  if (v.empty()) return 0.0;
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

// Every (feature, midpoint) pair, child SSEs recomputed from scratch.
OracleSplit brute_force(const Matrix& x, const V& y, const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& features, std::size_t min_leaf) {
  V all;
  for (auto r : rows) all.push_back(y[r]);
  const double parent = sse(all);
  const double tol = 1e-9 * parent;
  struct Cand {
    std::size_t f;
    double thr;
    double children;
  };
  std::vector<Cand> cands;
  for (auto f : features) {
    std::vector<double> values;
    for (auto r : rows) values.push_back(x(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      double thr = 0.5 * (values[i] + values[i + 1]);
      if (!(thr < values[i + 1])) thr = values[i];
      V left, right;
      for (auto r : rows) (x(r, f) <= thr ? left : right).push_back(y[r]);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      cands.push_back({f, thr, sse(left) + sse(right)});
    }
  }
  OracleSplit out;
  if (cands.empty()) return out;
  double best = cands[0].children;
  for (const auto& c : cands) best = std::min(best, c.children);
  if (!(parent - best > tol)) return out;
  for (const auto& c : cands) {  // already in (feature, threshold) order
    if (c.children <= best + tol) {
      out = {true, c.f, c.thr, parent - c.children};
      break;
    }
  }
  return out;
}

void check_tree_invariants(const forest::Tree& t, const HyperParams& hp) {
  REQUIRE_FALSE(t.nodes.empty());
  std::vector<int> depth(t.nodes.size(), 0);
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    CHECK(depth[i] <= hp.max_depth);
    if (n.is_leaf()) {
      CHECK(n.n_samples >= hp.min_samples_leaf);
      continue;
    }
    const auto& l = t.nodes.at(n.left);
    const auto& r = t.nodes.at(n.right);
    CHECK(static_cast<std::size_t>(n.left) == i + 1);  // preorder, left first
    depth[n.left] = depth[n.right] = depth[i] + 1;
    CHECK(n.n_samples >= hp.min_samples_split);
    CHECK(l.n_samples + r.n_samples == n.n_samples);
    CHECK(l.n_samples * l.mse + r.n_samples * r.mse <= n.n_samples * n.mse * (1 + 1e-12) + 1e-12);
  }
}

HyperParams exact_params() {
  HyperParams hp;
  hp.bootstrap = false;
  hp.min_samples_leaf = 1;
  hp.min_samples_split = 2;
  hp.n_trees = 1;
  return hp;
}

}  // namespace

TEST_CASE("best_split on a perfectly separable column") {
  const Matrix x = Matrix::from_columns({{1, 2, 3, 4}});
  const V y = {0, 0, 10, 10};
  const std::vector<std::size_t> rows = {0, 1, 2, 3}, feats = {0};
  const auto s = forest::best_split(x, y, rows, feats, 1);
  REQUIRE(s);
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->n_left == 2);
  CHECK(s->gain == doctest::Approx(100.0));

  auto hp = exact_params();
  hp.max_depth = 1;
  Rng rng(0);
  const auto t = forest::grow_tree(x, y, rows, hp, rng);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[1].value == 0.0);
  CHECK(t.nodes[2].value == 10.0);
}

TEST_CASE("constant target has no split") {
  const Matrix x = Matrix::from_columns({{1, 2, 3, 4}, {4, 3, 2, 1}});
  const std::vector<std::size_t> rows = {0, 1, 2, 3}, feats = {0, 1};
  CHECK_FALSE(forest::best_split(x, V(4, 2.5), rows, feats, 1));
}

TEST_CASE("best_split agrees with exhaustive enumeration") {
  std::mt19937_64 gen(777);
  std::normal_distribution<double> z(0.0, 1.0);
  int found = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + gen() % 19;
    const std::size_t p = 1 + gen() % 3;
    const bool discrete = t % 2 == 0;  // small integer grids force ties
    Matrix x(n, p);
    V y(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < p; ++c) x(r, c) = discrete ? double(gen() % 4) : z(gen);
      y[r] = discrete ? double(gen() % 3) : z(gen);
    }
    if (discrete && p > 1 && t % 4 == 0) {
      for (std::size_t r = 0; r < n; ++r) x(r, p - 1) = x(r, 0);  // duplicate feature
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (t % 3 == 0) {
      for (auto& r : rows) r = gen() % n;  // bootstrap-style repeats
    }
    std::vector<std::size_t> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    if (p > 1 && t % 5 == 0) feats.erase(feats.begin());
    const std::size_t min_leaf = 1 + gen() % 3;

    const auto got = forest::best_split(x, y, rows, feats, min_leaf);
    const auto want = brute_force(x, y, rows, feats, min_leaf);
    INFO("instance " << t);
    REQUIRE(bool(got) == want.found);
    if (!got) continue;
    ++found;
    CHECK(got->feature == want.feature);
    CHECK(got->threshold == want.threshold);
    CHECK(got->gain == doctest::Approx(want.gain).epsilon(1e-9));
  }
  CHECK(found > 100);
}

TEST_CASE("min_samples_leaf can stop a node") {
  std::mt19937_64 gen(5);
  const Matrix x = testing::random_matrix(10, 2, gen);
  V y(10);
  for (std::size_t i = 0; i < 10; ++i) y[i] = x(i, 0);
  auto hp = exact_params();
  hp.min_samples_leaf = 6;
  hp.min_samples_split = 2;
  std::vector<std::size_t> rows(10);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(1);
  const auto t = forest::grow_tree(x, y, rows, hp, rng);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].n_samples == 10);
}

TEST_CASE("unconstrained tree reproduces its training targets") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = testing::random_matrix(150, 3, gen);
    V y(150);
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto& v : y) v = z(gen);
    const auto m = forest::fit_forest(x, y, exact_params());
    const auto pred = forest::predict_forest(m, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(pred[i] == y[i]);
  }
}

TEST_CASE("tree structure invariants") {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> z(0.0, 1.0);
  const Matrix x = testing::random_matrix(300, 4, gen);
  V y(300);
  for (std::size_t i = 0; i < 300; ++i) y[i] = std::sin(2 * x(i, 0)) + x(i, 1) * x(i, 2) + 0.1 * z(gen);
  for (auto rule : {forest::FeatureSubsetRule::All, forest::FeatureSubsetRule::Sqrt,
                    forest::FeatureSubsetRule::Log2}) {
    for (int depth : {1, 3, forest::kUnlimitedDepth}) {
      HyperParams hp;
      hp.feature_subset = rule;
      hp.max_depth = depth;
      hp.min_samples_split = 6;
      hp.min_samples_leaf = 3;
      hp.n_trees = 5;
      hp.seed = 3;
      const auto m = forest::fit_forest(x, y, hp);
      for (const auto& t : m.trees) {
        check_tree_invariants(t, hp);
        CHECK(t.depth() <= depth);
        if (depth == 1) CHECK(t.leaf_count() <= 2);
      }
    }
  }
}

TEST_CASE("a one-tree forest without bootstrap is grow_tree on all rows") {
  std::mt19937_64 gen(12);
  const Matrix x = testing::random_matrix(80, 3, gen);
  V y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = x(i, 0) - x(i, 2);
  HyperParams hp = exact_params();
  hp.feature_subset = forest::FeatureSubsetRule::Sqrt;
  hp.min_samples_leaf = 4;
  hp.seed = 99;
  const auto m = forest::fit_forest(x, y, hp);
  std::vector<std::size_t> rows(80);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(derive_seed(99, 0));
  CHECK(m.trees.at(0) == forest::grow_tree(x, y, rows, hp, rng));
}

TEST_CASE("forest determinism across seeds and thread counts") {
  std::mt19937_64 gen(13);
  const Matrix x = testing::random_matrix(200, 3, gen);
  V y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = x(i, 0) * x(i, 1);
  HyperParams hp;
  hp.n_trees = 16;
  hp.feature_subset = forest::FeatureSubsetRule::Sqrt;
  hp.seed = 5;
  set_thread_count(1);
  const auto a = forest::fit_forest(x, y, hp);
  set_thread_count(4);
  const auto b = forest::fit_forest(x, y, hp);
  set_thread_count(1);
  CHECK(a == b);
  CHECK(forest::predict_forest(a, x) == forest::predict_forest(b, x));
  hp.seed = 6;
  CHECK_FALSE(forest::fit_forest(x, y, hp) == a);
}

TEST_CASE("midpoint hyperparameters beat the mean predictor in training") {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> z(0.0, 1.0);
  const Matrix x = testing::random_matrix(500, 3, gen);
  V y(500);
  for (std::size_t i = 0; i < 500; ++i) y[i] = std::sin(3 * x(i, 0)) + 0.5 * x(i, 1) + 0.1 * z(gen);
  HyperParams hp;
  hp.max_depth = 20;
  hp.min_samples_split = 12;
  hp.min_samples_leaf = 12;
  hp.n_trees = 50;
  const auto pred = forest::predict_forest(forest::fit_forest(x, y, hp), x);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 500;
  CHECK(metrics::rmse(y, pred) < metrics::rmse(y, V(500, mean)));
}

TEST_CASE("predict_forest averages trees") {
  SUBCASE("two constant trees") {
    forest::ForestModel m;
    forest::Tree a, b;
    a.nodes.push_back({.value = 1.0, .n_samples = 1});
    b.nodes.push_back({.value = 3.0, .n_samples = 1});
    m.trees = {a, b};
    const auto p = forest::predict_forest(m, Matrix::from_columns({{0.5, 7.0}}));
    CHECK(p == V{2.0, 2.0});
    CHECK(forest::predict_forest(m, Matrix::from_columns({{0.5}}), 1) == V{1.0});
  }
  SUBCASE("left iff value <= threshold") {
    forest::Tree t;
    t.nodes = {{.feature = 0, .threshold = 1.0, .left = 1, .right = 2},
               {.value = -1.0},
               {.value = 1.0}};
    const Matrix x = Matrix::from_columns({{1.0, std::nextafter(1.0, 2.0)}});
    CHECK(forest::predict_tree(t, x) == V{-1.0, 1.0});
  }
  SUBCASE("external mean and training hull") {
    std::mt19937_64 gen(15);
    const Matrix x = testing::random_matrix(120, 2, gen);
    V y(120);
    for (std::size_t i = 0; i < 120; ++i) y[i] = std::exp(x(i, 0)) + x(i, 1);
    HyperParams hp;
    hp.n_trees = 25;
    hp.min_samples_leaf = 2;
    const auto m = forest::fit_forest(x, y, hp);
    const Matrix probe = testing::random_matrix(300, 2, gen);
    const auto p = forest::predict_forest(m, probe);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    for (std::size_t r = 0; r < probe.rows(); ++r) {
      double s = 0;
      for (const auto& t : m.trees) s += t.predict(probe, r);
      CHECK(std::abs(p[r] - s / m.trees.size()) <= 1e-12);
      CHECK(p[r] >= *lo);
      CHECK(p[r] <= *hi);
    }
  }
  SUBCASE("missing predictor") {
    forest::ForestModel m;
    forest::Tree a;
    a.nodes.push_back({.value = 1.0});
    m.trees = {a};
    CHECK(std::isnan(forest::predict_forest(m, Matrix::from_columns({{std::nan("")}}))[0]));
  }
}

TEST_CASE("feature subset sizes") {
  using forest::FeatureSubsetRule;
  CHECK(forest::subset_size(FeatureSubsetRule::All, 7) == 7);
  CHECK(forest::subset_size(FeatureSubsetRule::Sqrt, 7) == 3);
  CHECK(forest::subset_size(FeatureSubsetRule::Log2, 7) == 3);
  CHECK(forest::subset_size(FeatureSubsetRule::Sqrt, 9) == 3);
  CHECK(forest::subset_size(FeatureSubsetRule::Log2, 9) == 4);
  CHECK(forest::subset_size(FeatureSubsetRule::Log2, 1) == 1);
  CHECK(forest::feature_subset_rule_from_string("auto") == FeatureSubsetRule::All);
}

TEST_CASE("hyperparameter validation") {
  HyperParams hp;
  hp.n_trees = 0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = {};
  hp.min_samples_leaf = 0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = {};
  hp.max_depth = 0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("grid search") {
  CHECK(forest::Grid::standard().size() == 162);
  CHECK(forest::Grid::standard().combinations({}).size() == 162);

  std::mt19937_64 gen(16);
  const Matrix x = testing::random_matrix(100, 2, gen);
  V y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = x(i, 0) + 0.2 * x(i, 1);
  const auto folds = resample::kfold_indices(100, 5, 1);

  SUBCASE("single point") {
    forest::Grid g{{true}, {forest::FeatureSubsetRule::All}, {10}, {6}, {6}};
    const auto r = forest::grid_search(x, y, g, folds, 10, 3);
    CHECK(r.table.size() == 1);
    CHECK(r.fits == 5);
    CHECK(r.best == r.table[0].params);
    CHECK(r.best.max_depth == 10);
  }
  SUBCASE("duplicates score identically and the first minimum wins") {
    forest::Grid g{{true}, {forest::FeatureSubsetRule::All}, {10, 2, 10}, {6}, {6, 20}};
    const auto r = forest::grid_search(x, y, g, folds, 10, 3);
    REQUIRE(r.table.size() == 6);
    CHECK(r.fits == 30);
    CHECK(r.table[0].score.per_fold == r.table[4].score.per_fold);
    CHECK(r.table[1].score.per_fold == r.table[5].score.per_fold);
    std::size_t first_min = 0;
    for (std::size_t i = 1; i < r.table.size(); ++i) {
      if (r.table[i].score.mean < r.table[first_min].score.mean) first_min = i;
    }
    CHECK(r.best == r.table[first_min].params);
  }
}

TEST_CASE("tree-count rule") {
  const std::vector<std::size_t> cands = {1, 10, 50, 100, 200};
  CHECK(forest::choose_tree_count(cands, V{1.0, 0.8, 0.7, 0.69, 0.688}, 0.05) == 50);
  CHECK(forest::choose_tree_count(cands, V{1, 1, 1, 1, 1}, 0.05) == 1);
  CHECK(forest::choose_tree_count(cands, V{1.0, 0.8, 0.7, 0.6, 0.59}, 0.05) == 100);
  CHECK(forest::choose_tree_count(cands, V{1.0, 0.5, 0.45, 0.4, 0.3}, 0.05) == 200);
  CHECK(forest::choose_tree_count(cands, V{1.0, 1.1, 0.5, 0.4, 0.3}, 0.05) == 1);
}

TEST_CASE("select_n_trees scores equal standalone forests") {
  std::mt19937_64 gen(17);
  const Matrix x = testing::random_matrix(120, 2, gen);
  V y(120);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t i = 0; i < 120; ++i) y[i] = x(i, 0) * x(i, 1) + 0.3 * z(gen);
  HyperParams hp;
  hp.seed = 8;
  hp.min_samples_leaf = 3;
  const auto folds = resample::kfold_indices(120, 5, 2);
  const std::vector<std::size_t> cands = {1, 5, 20};
  const auto r = forest::select_n_trees(x, y, hp, cands, 0.05, folds);
  REQUIRE(r.cv_rmse.size() == 3);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto h = hp;
    h.n_trees = cands[i];
    const metrics::ModelRecipe recipe = [&](const Matrix& tx, std::span<const double> ty, const Matrix& sx) {
      return forest::predict_forest(forest::fit_forest(tx, ty, h), sx);
    };
    CHECK(r.cv_rmse[i] == doctest::Approx(metrics::cross_val_rmse(recipe, x, y, folds).mean).epsilon(1e-12));
  }
  CHECK(r.n_trees == forest::choose_tree_count(cands, r.cv_rmse, 0.05));
}

TEST_CASE("dump_tree") {
  forest::Tree t;
  t.nodes = {{.feature = 0, .threshold = 2.5, .left = 1, .right = 2, .value = 5, .n_samples = 4, .mse = 25},
             {.value = 0, .n_samples = 2},
             {.value = 10, .n_samples = 2}};
  const auto text = forest::dump_tree(t, {Variable::EC});
  CHECK(text.find("EC <= 2.5") != std::string::npos);
  CHECK(text.find("samples = 4") != std::string::npos);
  CHECK(text.find("value = 10") != std::string::npos);
  const auto shallow = forest::dump_tree(t, {Variable::EC}, 0);
  CHECK(shallow.find("value = 10") == std::string::npos);
}
