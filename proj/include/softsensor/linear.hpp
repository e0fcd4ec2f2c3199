#pragma once

#include <span>
#include <vector>

#include "softsensor/matrix.hpp"
#include "softsensor/preprocess.hpp"
#include "softsensor/variables.hpp"

namespace softsensor::linear {

// y = intercept + sum_j coefficients[j] * z_j, where z is the predictor row
// after `transform` and then `scaling`.
struct LinearModel {
  std::vector<Variable> predictor_names;
  double intercept = 0.0;
  std::vector<double> coefficients;
  preprocess::TransformSpec transform;
  preprocess::ScalingParams scaling;

  bool operator==(const LinearModel&) const = default;
};

// Ordinary least squares with an intercept, solved by Householder QR.
// Throws NumericalError naming the dependent columns when the design
// (intercept + columns, each normalized to unit length) has a singular value
// below 1e-10 times the largest. The returned model has identity transform
// and unit scaling; `names` labels the columns (defaults to none).
LinearModel fit_ols(const Matrix& x, std::span<const double> y,
                    const std::vector<Variable>& names = {});

// Transform, standardize on x's rows, then OLS: the linear soft-sensor
// recipe. x holds raw predictor values with columns `names`.
LinearModel fit_linear_pipeline(const Matrix& x, std::span<const double> y,
                                const std::vector<Variable>& names,
                                const preprocess::TransformSpec& transform);

// Rows carry raw predictor values, columns in m.predictor_names order. A row
// with a missing (or untransformable) value predicts NaN.
std::vector<double> predict_linear(const LinearModel& m, const Matrix& rows);

}  // namespace softsensor::linear
