#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace softsensor::resample {

struct SplitPlan {
  std::vector<std::size_t> validation_indices;  // ascending
  std::vector<std::size_t> working_indices;     // ascending
  std::uint64_t seed = 0;
  std::size_t n_bins = 0;  // requested bins
  double fraction = 0.0;
};

// Stratified holdout of a continuous target.
//
// The target is cut into n_bins quantile bins (equal values always share a
// bin, so a constant target yields one bin); bins with fewer than two rows
// are merged into a neighbour. The validation size is ceil(fraction * n),
// apportioned across bins by largest remainder, and each bin contributes a
// uniform draw without replacement.
SplitPlan stratified_holdout(std::span<const double> y, double fraction, std::size_t n_bins,
                             std::uint64_t seed);

// Quantile bin id per row, after merging undersized bins (ids 0..B-1).
std::vector<std::size_t> quantile_bins(std::span<const double> y, std::size_t n_bins);

void write_split_csv(const SplitPlan& plan, const std::filesystem::path& path);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> fold_assignment;  // fold id per row
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return fold_assignment.size(); }
  // (train, test) positions for fold f, both ascending.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold(std::size_t f) const;
};

// Shuffled rows cut into k contiguous chunks; the first n % k folds get one
// extra row.
FoldPlan kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace softsensor::resample
