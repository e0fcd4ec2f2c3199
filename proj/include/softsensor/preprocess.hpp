#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softsensor/dataio.hpp"
#include "softsensor/matrix.hpp"

namespace softsensor::preprocess {

enum class TransformKind { Identity, NaturalLog, Cube };

std::string_view to_string(TransformKind kind);
TransformKind transform_kind_from_string(std::string_view name);

// Per-column transform recipe. Columns absent from the map are identity.
struct TransformSpec {
  std::map<Variable, TransformKind> kinds;

  TransformKind kind(Variable v) const;
  bool operator==(const TransformSpec&) const = default;
};

struct ScaleEntry {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const ScaleEntry&) const = default;
};

// Per-column standardization parameters, aligned with the matrix columns
// they were fitted on.
struct ScalingParams {
  std::vector<ScaleEntry> columns;
  bool operator==(const ScalingParams&) const = default;
};

// Adjusted Fisher-Pearson skewness G1 = g1 * sqrt(n(n-1)) / (n-2).
double skewness(std::span<const double> x);

// skew > threshold -> natural log (strictly positive columns only),
// skew < -threshold -> cube, otherwise identity. Only the given columns
// (default: every column in d) are examined.
TransformSpec suggest_transforms(const dataio::Dataset& d, double threshold,
                                 const std::vector<Variable>& columns = {});

double apply_transform(TransformKind kind, double x);

// Throws DataError naming column and row for a non-positive value under log.
dataio::Dataset apply_transform(const dataio::Dataset& d, const TransformSpec& spec);

// Same rules on a matrix whose columns are `vars`. NaN propagates.
Matrix apply_transform(const Matrix& x, const std::vector<Variable>& vars,
                       const TransformSpec& spec);

// Population (n) denominator. Throws NumericalError for a constant column.
ScalingParams fit_scaler(const Matrix& x, std::span<const std::size_t> training_rows);
ScalingParams fit_scaler(const Matrix& x);
Matrix scale(const Matrix& x, const ScalingParams& params);
Matrix unscale(const Matrix& x, const ScalingParams& params);

// Pearson's product-moment correlation.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct Correlation {
  Variable predictor;
  double r;
};

// Sorted by |r| descending; ties by canonical variable order. Rows with a
// missing value in either column are skipped pairwise.
std::vector<Correlation> correlation_table(const dataio::Dataset& d, Variable target,
                                           const std::vector<Variable>& predictors);

}  // namespace softsensor::preprocess
