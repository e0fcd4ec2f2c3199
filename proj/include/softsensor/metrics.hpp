#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "softsensor/matrix.hpp"
#include "softsensor/resample.hpp"

namespace softsensor::metrics {

// Root mean squared error.
double rmse(std::span<const double> y, std::span<const double> y_hat);

// 100 * rmse / mean(y). Throws NumericalError when mean(y) == 0.
double nrmse(std::span<const double> y, std::span<const double> y_hat);

// 100 * sum(y_hat - y) / sum(y_hat). The denominator is the sum of the
// predictions, not of the observations.
double pbias(std::span<const double> y, std::span<const double> y_hat);

// 1 - ((N - 1) / (N - p - 1)) * (1 - R^2).
double r_squared(std::span<const double> y, std::span<const double> y_hat);
double adjusted_r2(double r2, std::size_t n, std::size_t p);
double adjusted_r2(std::span<const double> y, std::span<const double> y_hat, std::size_t p);

enum class SpreadKind {
  AbsoluteError,  // sample sd of per-sample |y - y_hat|
  Fold,           // sample sd of per-fold RMSE (set by the caller)
};

struct EvaluationReport {
  double rmse = 0.0;
  double rmse_sd = 0.0;
  double nrmse_pct = 0.0;
  double pbias_pct = 0.0;
  std::size_t n = 0;
  std::string model;
  SpreadKind spread = SpreadKind::AbsoluteError;
};

// NaN predictions are excluded; `n` counts the evaluated rows.
EvaluationReport evaluate(std::span<const double> y, std::span<const double> y_hat,
                          std::string model_descriptor = {});

std::string report_csv_header();
std::string report_csv_row(const EvaluationReport& r);
std::string report_table(const std::vector<EvaluationReport>& reports);

// Fits on the training rows and predicts the test rows.
using ModelRecipe = std::function<std::vector<double>(
    const Matrix& train_x, std::span<const double> train_y, const Matrix& test_x)>;

struct CvResult {
  double mean = 0.0;
  double sd = 0.0;  // sample sd across folds
  std::vector<double> per_fold;
  std::vector<double> predictions;  // out-of-fold prediction per row
};

CvResult cross_val_rmse(const ModelRecipe& recipe, const Matrix& x, std::span<const double> y,
                        const resample::FoldPlan& folds);

// Mean and sample sd of a score list.
std::pair<double, double> mean_sd(std::span<const double> values);

}  // namespace softsensor::metrics
