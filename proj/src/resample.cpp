#include "softsensor/resample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "softsensor/error.hpp"
#include "softsensor/log.hpp"
#include "softsensor/rng.hpp"

namespace softsensor::resample {

std::vector<std::size_t> quantile_bins(std::span<const double> y, std::size_t n_bins) {
  const std::size_t n = y.size();
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> edges;
  for (std::size_t j = 1; j < n_bins; ++j) {
    const double e = sorted[j * n / n_bins];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  // Raw bin: number of edges <= value.
  std::vector<std::size_t> raw(n);
  std::vector<std::size_t> counts(edges.size() + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), y[i]) -
                                      edges.begin());
    ++counts[raw[i]];
  }

  // Drop empty bins, then fold undersized bins into the next (or previous,
  // for the last one).
  struct Part {
    std::size_t size = 0;
    std::vector<std::size_t> raw_bins;
  };
  std::vector<Part> parts;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] > 0) parts.push_back({counts[b], {b}});
  }
  std::size_t merges = 0;
  for (std::size_t i = 0; i < parts.size() && parts.size() > 1;) {
    if (parts[i].size >= 2) {
      ++i;
      continue;
    }
    const std::size_t into = i + 1 < parts.size() ? i + 1 : i - 1;
    parts[into].size += parts[i].size;
    parts[into].raw_bins.insert(parts[into].raw_bins.end(), parts[i].raw_bins.begin(),
                                parts[i].raw_bins.end());
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(i));
    ++merges;
  }
  if (merges) log_info(std::to_string(merges) + " undersized quantile bin(s) merged");

  std::vector<std::size_t> final_bin(counts.size(), 0);
  for (std::size_t g = 0; g < parts.size(); ++g) {
    for (auto b : parts[g].raw_bins) final_bin[b] = g;
  }
  std::vector<std::size_t> bins(n);
  for (std::size_t i = 0; i < n; ++i) bins[i] = final_bin[raw[i]];
  return bins;
}

SplitPlan stratified_holdout(std::span<const double> y, double fraction, std::size_t n_bins,
                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
  if (n_bins < 2) throw ConfigError("stratification needs at least 2 bins");
  const std::size_t n = y.size();
  if (n < n_bins) {
    throw DataError("stratified holdout: " + std::to_string(n) + " rows for " +
                    std::to_string(n_bins) + " bins");
  }
  if (std::any_of(y.begin(), y.end(), [](double v) { return std::isnan(v); })) {
    throw DataError("stratified holdout: target contains missing values");
  }

  const auto bins = quantile_bins(y, n_bins);
  const std::size_t n_groups = *std::max_element(bins.begin(), bins.end()) + 1;
  std::vector<std::vector<std::size_t>> members(n_groups);
  for (std::size_t i = 0; i < n; ++i) members[bins[i]].push_back(i);

  // Largest-remainder apportionment of the total validation size.
  const auto total = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> take(n_groups);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double quota = static_cast<double>(total) * static_cast<double>(members[g].size()) /
                         static_cast<double>(n);
    take[g] = static_cast<std::size_t>(std::floor(quota));
    assigned += take[g];
    remainders.emplace_back(quota - std::floor(quota), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    const auto g = remainders[i].second;
    if (take[g] < members[g].size()) {
      ++take[g];
      ++assigned;
    }
  }

  Rng rng(seed);
  SplitPlan plan;
  plan.seed = seed;
  plan.n_bins = n_bins;
  plan.fraction = fraction;
  std::vector<char> is_validation(n, 0);
  for (std::size_t g = 0; g < n_groups; ++g) {
    auto& m = members[g];
    rng.shuffle(m.begin(), m.end());
    for (std::size_t i = 0; i < take[g]; ++i) is_validation[m[i]] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (is_validation[i] ? plan.validation_indices : plan.working_indices).push_back(i);
  }
  return plan;
}

void write_split_csv(const SplitPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const std::size_t n = plan.validation_indices.size() + plan.working_indices.size();
  std::vector<const char*> role(n, "working");
  for (auto i : plan.validation_indices) role[i] = "validation";
  out << "row_index,role\n";
  for (std::size_t i = 0; i < n; ++i) out << i << ',' << role[i] << '\n';
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> FoldPlan::fold(
    std::size_t f) const {
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < fold_assignment.size(); ++i) {
    (fold_assignment[i] == f ? test : train).push_back(i);
  }
  return {std::move(train), std::move(test)};
}

FoldPlan kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (n < k) {
    throw DataError("k-fold: " + std::to_string(n) + " rows cannot fill " + std::to_string(k) +
                    " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm.begin(), perm.end());

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_assignment.resize(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.fold_assignment[perm[pos++]] = f;
  }
  return plan;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return 1.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace softsensor::resample
