#pragma once

#include <climits>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softsensor/matrix.hpp"
#include "softsensor/metrics.hpp"
#include "softsensor/resample.hpp"
#include "softsensor/rng.hpp"
#include "softsensor/variables.hpp"

namespace softsensor::forest {

// Number of candidate features drawn at each split.
enum class FeatureSubsetRule { All, Sqrt, Log2 };

std::string_view to_string(FeatureSubsetRule rule);
FeatureSubsetRule feature_subset_rule_from_string(std::string_view name);

// all -> p, sqrt -> ceil(sqrt(p)), log2 -> ceil(log2(p)); at least 1.
std::size_t subset_size(FeatureSubsetRule rule, std::size_t p);

inline constexpr int kUnlimitedDepth = INT_MAX;

struct HyperParams {
  bool bootstrap = true;
  FeatureSubsetRule feature_subset = FeatureSubsetRule::All;
  int max_depth = kUnlimitedDepth;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  std::string describe() const;
  bool operator==(const HyperParams&) const = default;
};

// Flat node record. Internal nodes have feature >= 0 and child indices;
// every node carries the mean, count and MSE of its training targets.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  std::size_t n_samples = 0;
  double mse = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Nodes in depth-first, left-first preorder; the root is nodes[0].
struct Tree {
  std::vector<TreeNode> nodes;

  // Go left iff value <= threshold.
  double predict(const Matrix& x, std::size_t row) const;
  int depth() const;
  std::size_t leaf_count() const;
  bool operator==(const Tree&) const = default;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;  // parent SSE minus summed child SSE
  std::size_t n_left = 0;
};

// Exhaustive CART variance-reduction search over the candidate features,
// thresholds at midpoints between consecutive distinct values. Minimizes
// n_L * var_L + n_R * var_R subject to both children holding at least
// min_samples_leaf rows; ties (within a 1e-10 relative tolerance) go to the
// lowest feature index, then the lowest threshold. `rows` may repeat
// indices (bootstrap samples). Returns nullopt if nothing reduces the SSE.
std::optional<Split> best_split(const Matrix& x, std::span<const double> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf);

// Grows one regression tree on `rows` (repeats allowed). Stops at
// max_depth, below min_samples_split, when the node variance is < 1e-12,
// or when no valid split exists. Feature subsets are drawn from `rng` at
// each node reaching split search, in the order nodes are created.
Tree grow_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
               const HyperParams& hp, Rng& rng);

struct ForestModel {
  std::vector<Tree> trees;
  HyperParams hyperparams;
  std::vector<Variable> predictor_names;

  std::uint64_t seed() const noexcept { return hyperparams.seed; }
  bool operator==(const ForestModel&) const = default;
};

// Tree t draws from Rng(derive_seed(hp.seed, t)): first the bootstrap
// sample (n draws with replacement) when enabled, then its node feature
// subsets. Trees train in parallel; the result never depends on the
// worker count.
ForestModel fit_forest(const Matrix& x, std::span<const double> y, const HyperParams& hp,
                       std::vector<Variable> predictor_names = {});

// Mean over the first `n_trees` trees (all when 0). Rows with a missing
// predictor predict NaN.
std::vector<double> predict_forest(const ForestModel& m, const Matrix& rows,
                                   std::size_t n_trees = 0);
std::vector<double> predict_tree(const Tree& t, const Matrix& rows);

// Value lists per hyperparameter, iterated with bootstrap outermost and
// min_samples_leaf innermost.
struct Grid {
  std::vector<bool> bootstrap;
  std::vector<FeatureSubsetRule> feature_subset;
  std::vector<int> max_depth;
  std::vector<std::size_t> min_samples_split;
  std::vector<std::size_t> min_samples_leaf;

  // bootstrap {true,false} x subset {all,sqrt,log2} x depth {10,20,30} x
  // split {6,12,20} x leaf {6,12,20}: 162 combinations.
  static Grid standard();
  std::vector<HyperParams> combinations(const HyperParams& base) const;
  std::size_t size() const;
};

struct GridEntry {
  HyperParams params;
  metrics::CvResult score;
};

struct GridResult {
  HyperParams best;
  std::vector<GridEntry> table;
  std::size_t fits = 0;
};

// Mean k-fold CV RMSE for every combination with `search_n_trees` trees;
// the first minimum in iteration order wins.
GridResult grid_search(const Matrix& x, std::span<const double> y, const Grid& grid,
                       const resample::FoldPlan& folds, std::size_t search_n_trees,
                       std::uint64_t seed);

// Walks the candidates in order while the relative CV-RMSE improvement over
// the previous candidate exceeds `threshold`; returns the last candidate
// that cleared it, or the first candidate if none did.
std::size_t choose_tree_count(std::span<const std::size_t> candidates,
                              std::span<const double> cv_rmse, double threshold);

struct TreeCountResult {
  std::size_t n_trees = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> cv_rmse;
};

// CV-RMSE per candidate count. Because tree t depends only on (seed, t), a
// forest of n trees equals the first n trees of a larger one, so each fold
// trains max(candidates) trees once and scores every prefix.
TreeCountResult select_n_trees(const Matrix& x, std::span<const double> y,
                               const HyperParams& hp, std::span<const std::size_t> candidates,
                               double threshold, const resample::FoldPlan& folds);

inline const std::vector<std::size_t> kDefaultTreeCandidates = {1, 10, 50, 100, 200};

// Indented text rendering with samples/value/MSE annotations per node.
// Nodes deeper than max_depth are elided.
std::string dump_tree(const Tree& t, const std::vector<Variable>& names,
                      int max_depth = kUnlimitedDepth);

}  // namespace softsensor::forest
