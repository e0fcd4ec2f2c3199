#include "softsensor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "softsensor/csv.hpp"
#include "softsensor/error.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::metrics {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw DataError("metric inputs differ in length (" + std::to_string(y.size()) + " vs " +
                    std::to_string(y_hat.size()) + ")");
  }
  if (y.empty()) throw DataError("metric inputs are empty");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  std::vector<double> sq(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sq[i] = (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(y.size()));
}

double nrmse(std::span<const double> y, std::span<const double> y_hat) {
  const double e = rmse(y, y_hat);
  const double m = mean(y);
  if (m == 0.0) throw NumericalError("nRMSE undefined: observed mean is zero");
  return 100.0 * e / m;
}

double pbias(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  std::vector<double> diff(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) diff[i] = y_hat[i] - y[i];
  const double denom = pairwise_sum(y_hat);
  if (denom == 0.0) throw NumericalError("PBIAS undefined: predictions sum to zero");
  return 100.0 * pairwise_sum(diff) / denom;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  std::vector<double> sq(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sq[i] = (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  const double ss_tot = centered_sum_of_squares(y);
  if (!(ss_tot > 0.0)) throw NumericalError("R^2 undefined: observed values are constant");
  return 1.0 - pairwise_sum(sq) / ss_tot;
}

double adjusted_r2(double r2, std::size_t n, std::size_t p) {
  if (n <= p + 1) {
    throw NumericalError("adjusted R^2 needs N > p + 1 (N=" + std::to_string(n) +
                         ", p=" + std::to_string(p) + ")");
  }
  const double nn = static_cast<double>(n);
  return 1.0 - (nn - 1.0) / (nn - static_cast<double>(p) - 1.0) * (1.0 - r2);
}

double adjusted_r2(std::span<const double> y, std::span<const double> y_hat, std::size_t p) {
  return adjusted_r2(r_squared(y, y_hat), y.size(), p);
}

EvaluationReport evaluate(std::span<const double> y, std::span<const double> y_hat,
                          std::string model_descriptor) {
  check_lengths(y, y_hat);
  std::vector<double> obs, pred;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::isnan(y_hat[i]) || std::isnan(y[i])) continue;
    obs.push_back(y[i]);
    pred.push_back(y_hat[i]);
  }
  if (obs.empty()) throw DataError("no rows with both an observation and a prediction");
  EvaluationReport r;
  r.model = std::move(model_descriptor);
  r.n = obs.size();
  r.rmse = rmse(obs, pred);
  std::vector<double> abs_err(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) abs_err[i] = std::abs(obs[i] - pred[i]);
  r.rmse_sd = obs.size() > 1 ? standard_deviation(abs_err, 1) : 0.0;
  const double m = mean(obs);
  r.nrmse_pct = m != 0.0 ? 100.0 * r.rmse / m : std::nan("");
  const double pred_sum = pairwise_sum(pred);
  r.pbias_pct = pred_sum != 0.0 ? pbias(obs, pred) : std::nan("");
  return r;
}

std::string report_csv_header() { return "model,n,rmse,rmse_sd,nrmse_pct,pbias_pct"; }

std::string report_csv_row(const EvaluationReport& r) {
  std::ostringstream out;
  out << csv::escape(r.model) << ',' << r.n << ',' << format_double(r.rmse) << ','
      << format_double(r.rmse_sd) << ',' << format_double(r.nrmse_pct) << ','
      << format_double(r.pbias_pct);
  return out.str();
}

std::string report_table(const std::vector<EvaluationReport>& reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.model.size());
  std::ostringstream out;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out << pad("model", width) << "  " << pad("n", 7) << pad("RMSE +- sd", 22)
      << pad("nRMSE (%)", 11) << "PBIAS (%)\n";
  for (const auto& r : reports) {
    out << pad(r.model, width) << "  " << pad(std::to_string(r.n), 7)
        << pad(fixed(r.rmse, 4) + " +- " + fixed(r.rmse_sd, 4), 22)
        << pad(fixed(r.nrmse_pct, 2), 11) << fixed(r.pbias_pct, 2) << '\n';
  }
  return out.str();
}

std::pair<double, double> mean_sd(std::span<const double> values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  const double m = mean(values);
  const double sd = values.size() > 1 ? standard_deviation(values, 1) : 0.0;
  return {m, sd};
}

CvResult cross_val_rmse(const ModelRecipe& recipe, const Matrix& x, std::span<const double> y,
                        const resample::FoldPlan& folds) {
  if (folds.n() != x.rows() || y.size() != x.rows()) {
    throw DataError("cross-validation: fold plan covers " + std::to_string(folds.n()) +
                    " rows, data has " + std::to_string(x.rows()));
  }
  CvResult result;
  result.predictions.assign(x.rows(), std::nan(""));
  for (std::size_t f = 0; f < folds.k; ++f) {
    const auto [train, test] = folds.fold(f);
    const auto train_y = select(y, train);
    const auto test_y = select(y, test);
    const auto pred = recipe(x.select_rows(train), train_y, x.select_rows(test));
    result.per_fold.push_back(rmse(test_y, pred));
    for (std::size_t i = 0; i < test.size(); ++i) result.predictions[test[i]] = pred[i];
  }
  std::tie(result.mean, result.sd) = mean_sd(result.per_fold);
  return result;
}

}  // namespace softsensor::metrics
