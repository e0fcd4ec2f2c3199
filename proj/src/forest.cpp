#include "softsensor/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "softsensor/error.hpp"
#include "softsensor/parallel.hpp"

namespace softsensor::forest {

namespace {

constexpr double kTieTolerance = 1e-10;
constexpr double kPureVariance = 1e-12;

// Running best candidate shared by the standalone search and the tree
// builder, so both apply the same acceptance and tie rules.
struct SplitSearch {
  double parent_sse = 0.0;
  double tol = 0.0;
  bool found = false;
  double children_sse = 0.0;
  Split split;

  void offer(std::size_t feature, double threshold, double children, std::size_t n_left) {
    const double bound = found ? children_sse : parent_sse;
    if (children < bound - tol) {
      found = true;
      children_sse = children;
      split = {feature, threshold, parent_sse - children, n_left};
    }
  }
};

double midpoint(double a, double b) {
  const double mid = 0.5 * (a + b);
  return mid < b ? mid : a;
}

// Scans one feature whose node rows are already sorted by value.
// `centered_y(i)` is y of the i-th sorted row minus the node mean.
template <typename Index>
void scan_feature(std::span<const Index> sorted, std::span<const double> xcol,
                  std::span<const double> y, double node_mean, std::size_t min_leaf,
                  std::size_t feature, SplitSearch& search) {
  const std::size_t n = sorted.size();
  double s1 = 0.0, s2 = 0.0;
  for (auto r : sorted) {
    const double d = y[r] - node_mean;
    s1 += d;
    s2 += d * d;
  }
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = y[sorted[i]] - node_mean;
    l1 += d;
    l2 += d * d;
    const std::size_t n_left = i + 1;
    const std::size_t n_right = n - n_left;
    if (n_right < min_leaf) break;
    if (n_left < min_leaf) continue;
    const double a = xcol[sorted[i]];
    const double b = xcol[sorted[i + 1]];
    if (!(a < b)) continue;
    const double sse_left = l2 - l1 * l1 / static_cast<double>(n_left);
    const double r1 = s1 - l1;
    const double sse_right = (s2 - l2) - r1 * r1 / static_cast<double>(n_right);
    search.offer(feature, midpoint(a, b), std::max(0.0, sse_left) + std::max(0.0, sse_right),
                 n_left);
  }
}

struct NodeStats {
  double mean = 0.0;
  double sse = 0.0;
};

template <typename Index>
NodeStats node_stats(std::span<const Index> rows, std::span<const double> y) {
  NodeStats s;
  for (auto r : rows) s.mean += y[r];
  s.mean /= static_cast<double>(rows.size());
  for (auto r : rows) s.sse += (y[r] - s.mean) * (y[r] - s.mean);
  return s;
}

// Draws k of p feature indices uniformly without replacement (partial
// Fisher-Yates), returned ascending. Consumes no randomness when k == p.
std::vector<std::size_t> draw_features(std::size_t p, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  if (k >= p) return all;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_below(p - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

// Tree growth over per-feature presorted index arrays. Every array holds
// the same multiset of rows; a node owns the same [begin, end) range in
// each, and splitting stably partitions every array.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const HyperParams& hp, Rng& rng,
              std::vector<std::vector<std::uint32_t>> sorted)
      : x_(x), y_(y), hp_(hp), rng_(rng), sorted_(std::move(sorted)) {}

  Tree build() {
    Tree tree;
    const std::size_t n = sorted_.empty() ? 0 : sorted_[0].size();
    scratch_.resize(n);
    struct Pending {
      std::size_t begin, end;
      int depth;
      std::int32_t parent;
      bool is_left;
    };
    std::vector<Pending> stack{{0, n, 0, -1, false}};
    while (!stack.empty()) {
      const Pending item = stack.back();
      stack.pop_back();
      const auto index = static_cast<std::int32_t>(tree.nodes.size());
      if (item.parent >= 0) {
        auto& parent = tree.nodes[static_cast<std::size_t>(item.parent)];
        (item.is_left ? parent.left : parent.right) = index;
      }
      TreeNode node;
      const std::span<const std::uint32_t> rows(sorted_[0].data() + item.begin,
                                                item.end - item.begin);
      const NodeStats stats = node_stats(rows, y_);
      node.value = stats.mean;
      node.n_samples = rows.size();
      node.mse = stats.sse / static_cast<double>(rows.size());

      std::optional<Split> split;
      if (item.depth < hp_.max_depth && rows.size() >= hp_.min_samples_split &&
          node.mse >= kPureVariance) {
        split = search(item.begin, item.end, stats);
      }
      if (split) {
        node.feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        const std::size_t mid = partition(item.begin, item.end, *split);
        tree.nodes.push_back(node);
        stack.push_back({mid, item.end, item.depth + 1, index, false});
        stack.push_back({item.begin, mid, item.depth + 1, index, true});
      } else {
        tree.nodes.push_back(node);
      }
    }
    return tree;
  }

 private:
  std::optional<Split> search(std::size_t begin, std::size_t end, const NodeStats& stats) {
    const std::size_t p = x_.cols();
    const auto features = draw_features(p, subset_size(hp_.feature_subset, p), rng_);
    SplitSearch s;
    s.parent_sse = stats.sse;
    s.tol = kTieTolerance * stats.sse;
    for (auto f : features) {
      const std::span<const std::uint32_t> rows(sorted_[f].data() + begin, end - begin);
      scan_feature<std::uint32_t>(rows, x_.column(f), y_, stats.mean, hp_.min_samples_leaf, f,
                                  s);
    }
    if (!s.found) return std::nullopt;
    return s.split;
  }

  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto col = x_.column(split.feature);
    std::size_t mid = begin;
    for (auto& arr : sorted_) {
      std::size_t left = begin, right = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = arr[i];
        if (col[r] <= split.threshold) {
          arr[left++] = r;
        } else {
          scratch_[right++] = r;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(right),
                arr.begin() + static_cast<std::ptrdiff_t>(left));
      mid = left;
    }
    return mid;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const HyperParams& hp_;
  Rng& rng_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> scratch_;
};

// Row order per feature by (value, row index).
std::vector<std::vector<std::uint32_t>> presort(const Matrix& x) {
  std::vector<std::vector<std::uint32_t>> order(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& o = order[f];
    o.resize(x.rows());
    std::iota(o.begin(), o.end(), 0u);
    const auto col = x.column(f);
    std::sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
  return order;
}

// Expands the global order by per-row multiplicities.
std::vector<std::vector<std::uint32_t>> expand(
    const std::vector<std::vector<std::uint32_t>>& order, std::span<const std::uint32_t> counts,
    std::size_t total) {
  std::vector<std::vector<std::uint32_t>> out(order.size());
  for (std::size_t f = 0; f < order.size(); ++f) {
    out[f].reserve(total);
    for (auto r : order[f]) out[f].insert(out[f].end(), counts[r], r);
  }
  return out;
}

void check_training_data(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw DataError("cannot train on empty data");
  if (y.size() != x.rows()) {
    throw DataError("training matrix has " + std::to_string(x.rows()) + " rows, target has " +
                    std::to_string(y.size()));
  }
  if (x.cols() == 0) throw DataError("cannot train a tree without predictors");
  if (x.rows() > UINT32_MAX) throw DataError("too many training rows");
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (double v : x.column(c)) {
      if (!std::isfinite(v)) throw DataError("training predictors contain missing values");
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("training target contains missing values");
  }
}

bool row_complete(const Matrix& x, std::size_t r) {
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (std::isnan(x(r, c))) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(FeatureSubsetRule rule) {
  switch (rule) {
    case FeatureSubsetRule::All: return "all";
    case FeatureSubsetRule::Sqrt: return "sqrt";
    case FeatureSubsetRule::Log2: return "log2";
  }
  return "?";
}

FeatureSubsetRule feature_subset_rule_from_string(std::string_view name) {
  if (name == "all" || name == "auto") return FeatureSubsetRule::All;
  if (name == "sqrt") return FeatureSubsetRule::Sqrt;
  if (name == "log2") return FeatureSubsetRule::Log2;
  throw ConfigError("unknown feature subset rule '" + std::string(name) + "'");
}

std::size_t subset_size(FeatureSubsetRule rule, std::size_t p) {
  if (p == 0) return 0;
  std::size_t k = p;
  switch (rule) {
    case FeatureSubsetRule::All: k = p; break;
    case FeatureSubsetRule::Sqrt:
      k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
      break;
    case FeatureSubsetRule::Log2:
      k = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(p))));
      break;
  }
  return std::clamp<std::size_t>(k, 1, p);
}

void HyperParams::validate() const {
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
}

std::string HyperParams::describe() const {
  std::ostringstream out;
  out << "bootstrap=" << (bootstrap ? "true" : "false")
      << " feature_subset=" << to_string(feature_subset) << " max_depth="
      << (max_depth == kUnlimitedDepth ? std::string("none") : std::to_string(max_depth))
      << " min_samples_split=" << min_samples_split << " min_samples_leaf=" << min_samples_leaf
      << " n_trees=" << n_trees << " seed=" << seed;
  return out.str();
}

double Tree::predict(const Matrix& x, std::size_t row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x(row, static_cast<std::size_t>(n.feature)) <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].value;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::optional<Split> best_split(const Matrix& x, std::span<const double> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf) {
  if (rows.size() < 2) return std::nullopt;
  const NodeStats stats = node_stats(rows, y);
  SplitSearch s;
  s.parent_sse = stats.sse;
  s.tol = kTieTolerance * stats.sse;
  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  for (auto f : features) {
    const auto col = x.column(f);
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
    scan_feature<std::size_t>(sorted, col, y, stats.mean, std::max<std::size_t>(1, min_samples_leaf),
                              f, s);
  }
  if (!s.found) return std::nullopt;
  return s.split;
}

Tree grow_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
               const HyperParams& hp, Rng& rng) {
  hp.validate();
  check_training_data(x, y);
  if (rows.empty()) throw DataError("grow_tree needs at least one row");
  std::vector<std::uint32_t> counts(x.rows(), 0);
  for (auto r : rows) ++counts.at(r);
  TreeBuilder builder(x, y, hp, rng, expand(presort(x), counts, rows.size()));
  return builder.build();
}

ForestModel fit_forest(const Matrix& x, std::span<const double> y, const HyperParams& hp,
                       std::vector<Variable> predictor_names) {
  hp.validate();
  check_training_data(x, y);
  if (!predictor_names.empty() && predictor_names.size() != x.cols()) {
    throw DataError("fit_forest: predictor name count does not match the matrix");
  }
  const std::size_t n = x.rows();
  const auto order = presort(x);
  ForestModel model;
  model.hyperparams = hp;
  model.predictor_names = std::move(predictor_names);
  model.trees.resize(hp.n_trees);
  parallel_for(hp.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(hp.seed, t));
    std::vector<std::uint32_t> counts(n, hp.bootstrap ? 0u : 1u);
    if (hp.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.uniform_below(n)];
    }
    TreeBuilder builder(x, y, hp, rng, expand(order, counts, n));
    model.trees[t] = builder.build();
  });
  return model;
}

std::vector<double> predict_tree(const Tree& t, const Matrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    out[r] = row_complete(rows, r) ? t.predict(rows, r) : std::nan("");
  }
  return out;
}

std::vector<double> predict_forest(const ForestModel& m, const Matrix& rows,
                                   std::size_t n_trees) {
  const std::size_t used = n_trees == 0 ? m.trees.size() : std::min(n_trees, m.trees.size());
  if (used == 0) throw DataError("forest has no trees");
  if (!m.predictor_names.empty() && rows.cols() != m.predictor_names.size()) {
    throw DataError("predict_forest: expected " + std::to_string(m.predictor_names.size()) +
                    " predictor columns, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    if (!row_complete(rows, r)) {
      out[r] = std::nan("");
      continue;
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < used; ++t) sum += m.trees[t].predict(rows, r);
    out[r] = sum / static_cast<double>(used);
  }
  return out;
}

Grid Grid::standard() {
  Grid g;
  g.bootstrap = {true, false};
  g.feature_subset = {FeatureSubsetRule::All, FeatureSubsetRule::Sqrt, FeatureSubsetRule::Log2};
  g.max_depth = {10, 20, 30};
  g.min_samples_split = {6, 12, 20};
  g.min_samples_leaf = {6, 12, 20};
  return g;
}

std::size_t Grid::size() const {
  return bootstrap.size() * feature_subset.size() * max_depth.size() * min_samples_split.size() *
         min_samples_leaf.size();
}

std::vector<HyperParams> Grid::combinations(const HyperParams& base) const {
  std::vector<HyperParams> out;
  out.reserve(size());
  for (bool b : bootstrap)
    for (auto rule : feature_subset)
      for (int depth : max_depth)
        for (auto split : min_samples_split)
          for (auto leaf : min_samples_leaf) {
            HyperParams hp = base;
            hp.bootstrap = b;
            hp.feature_subset = rule;
            hp.max_depth = depth;
            hp.min_samples_split = split;
            hp.min_samples_leaf = leaf;
            out.push_back(hp);
          }
  return out;
}

GridResult grid_search(const Matrix& x, std::span<const double> y, const Grid& grid,
                       const resample::FoldPlan& folds, std::size_t search_n_trees,
                       std::uint64_t seed) {
  HyperParams base;
  base.n_trees = search_n_trees;
  base.seed = seed;
  const auto combos = grid.combinations(base);
  if (combos.empty()) throw ConfigError("hyperparameter grid is empty");
  GridResult result;
  for (const auto& hp : combos) {
    const metrics::ModelRecipe recipe = [&hp](const Matrix& tx, std::span<const double> ty,
                                              const Matrix& vx) {
      return predict_forest(fit_forest(tx, ty, hp), vx);
    };
    result.table.push_back({hp, metrics::cross_val_rmse(recipe, x, y, folds)});
    result.fits += folds.k;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    if (result.table[i].score.mean < result.table[best].score.mean) best = i;
  }
  result.best = result.table[best].params;
  return result;
}

std::size_t choose_tree_count(std::span<const std::size_t> candidates,
                              std::span<const double> cv_rmse, double threshold) {
  if (candidates.empty() || candidates.size() != cv_rmse.size()) {
    throw ConfigError("tree-count candidates and scores must be non-empty and aligned");
  }
  std::size_t chosen = candidates[0];
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double prev = cv_rmse[i - 1];
    const double improvement = prev > 0.0 ? (prev - cv_rmse[i]) / prev : 0.0;
    if (!(improvement > threshold)) break;
    chosen = candidates[i];
  }
  return chosen;
}

TreeCountResult select_n_trees(const Matrix& x, std::span<const double> y,
                               const HyperParams& hp, std::span<const std::size_t> candidates,
                               double threshold, const resample::FoldPlan& folds) {
  if (candidates.empty()) throw ConfigError("no tree-count candidates");
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i] <= candidates[i - 1]) {
      throw ConfigError("tree-count candidates must be strictly increasing");
    }
  }
  if (candidates[0] < 1) throw ConfigError("tree-count candidates must be >= 1");
  HyperParams big = hp;
  big.n_trees = candidates.back();
  std::vector<std::vector<double>> per_fold(candidates.size());
  for (std::size_t f = 0; f < folds.k; ++f) {
    const auto [train, test] = folds.fold(f);
    const auto model = fit_forest(x.select_rows(train), select(y, train), big);
    const Matrix test_x = x.select_rows(test);
    const auto test_y = select(y, test);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      per_fold[c].push_back(metrics::rmse(test_y, predict_forest(model, test_x, candidates[c])));
    }
  }
  TreeCountResult result;
  result.candidates.assign(candidates.begin(), candidates.end());
  for (const auto& scores : per_fold) result.cv_rmse.push_back(metrics::mean_sd(scores).first);
  result.n_trees = choose_tree_count(candidates, result.cv_rmse, threshold);
  return result;
}

std::string dump_tree(const Tree& t, const std::vector<Variable>& names, int max_depth) {
  std::ostringstream out;
  out.precision(6);
  struct Item {
    std::size_t node;
    int depth;
    std::string label;
  };
  std::vector<Item> stack{{0, 0, ""}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const auto& n = t.nodes[item.node];
    const std::string indent(static_cast<std::size_t>(item.depth) * 4, ' ');
    out << indent << item.label;
    if (!n.is_leaf()) {
      const auto f = static_cast<std::size_t>(n.feature);
      const std::string name =
          f < names.size() ? std::string(softsensor::to_string(names[f])) : "x[" + std::to_string(f) + "]";
      out << name << " <= " << n.threshold << "  ";
    } else {
      out << "leaf  ";
    }
    out << "mse = " << n.mse << ", samples = " << n.n_samples << ", value = " << n.value << '\n';
    if (n.is_leaf()) continue;
    if (item.depth + 1 > max_depth) {
      out << indent << "    ...\n";
      continue;
    }
    stack.push_back({static_cast<std::size_t>(n.right), item.depth + 1, "False: "});
    stack.push_back({static_cast<std::size_t>(n.left), item.depth + 1, "True:  "});
  }
  return out.str();
}

}  // namespace softsensor::forest
