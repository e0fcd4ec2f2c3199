#include "softsensor/numeric.hpp"

#include <charconv>

#include <cmath>
#include <vector>

namespace softsensor {

double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t kBlock = 32;
  if (x.size() <= kBlock) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(std::span<const double> x) {
  if (x.empty()) return std::nan("");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double centered_sum_of_squares(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return pairwise_sum(sq);
}

double standard_deviation(std::span<const double> x, int ddof) {
  const auto n = static_cast<double>(x.size());
  if (n - ddof <= 0) return std::nan("");
  return std::sqrt(centered_sum_of_squares(x) / (n - ddof));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace softsensor
