#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace softsensor {

// Pairwise (cascade) summation; error grows as O(log n) instead of O(n).
double pairwise_sum(std::span<const double> x);

double mean(std::span<const double> x);

// Sum of squared deviations from the mean (two-pass).
double centered_sum_of_squares(std::span<const double> x);

// ddof = 1 for the sample sd, 0 for the population sd.
double standard_deviation(std::span<const double> x, int ddof);

// Shortest decimal that round-trips; "NaN" for NaN.
std::string format_double(double v);

}  // namespace softsensor
