#include "softsensor/linear.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "softsensor/error.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::linear {

namespace {

constexpr double kRankTolerance = 1e-10;

// Column-normalized design with a leading intercept column.
Eigen::MatrixXd normalized_design(const Matrix& x, std::size_t upto) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  Eigen::MatrixXd d(n, static_cast<Eigen::Index>(upto + 1));
  d.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (std::size_t c = 0; c < upto; ++c) {
    Eigen::Map<const Eigen::VectorXd> col(x.column(c).data(), n);
    const double norm = col.norm();
    d.col(static_cast<Eigen::Index>(c + 1)) = norm > 0.0 ? Eigen::VectorXd(col / norm)
                                                         : Eigen::VectorXd::Zero(n);
  }
  return d;
}

bool full_rank(const Eigen::MatrixXd& d) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
  const auto& s = svd.singularValues();
  return s.size() == 0 || s.minCoeff() > kRankTolerance * s.maxCoeff();
}

std::string column_label(const std::vector<Variable>& names, std::size_t c) {
  return c < names.size() ? std::string(to_string(names[c])) : "column " + std::to_string(c);
}

void check_rank(const Matrix& x, const std::vector<Variable>& names) {
  if (full_rank(normalized_design(x, x.cols()))) return;
  // Greedily find the columns that add nothing to the span of their
  // predecessors (and the intercept).
  std::string dependent;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    kept.push_back(c);
    if (!full_rank(normalized_design(x.select_cols(kept), kept.size()))) {
      kept.pop_back();
      if (!dependent.empty()) dependent += ", ";
      dependent += column_label(names, c);
    }
  }
  throw NumericalError("rank-deficient design: linearly dependent column(s): " + dependent);
}

}  // namespace

LinearModel fit_ols(const Matrix& x, std::span<const double> y,
                    const std::vector<Variable>& names) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw DataError("fit_ols: design has " + std::to_string(n) +
                                     " rows, target has " + std::to_string(y.size()));
  if (n <= p + 1) {
    throw NumericalError("fit_ols needs more than p + 1 = " + std::to_string(p + 1) +
                         " observations, got " + std::to_string(n));
  }
  if (!names.empty() && names.size() != p) throw DataError("fit_ols: name count mismatch");

  LinearModel m;
  m.predictor_names = names;
  m.scaling.columns.assign(p, preprocess::ScaleEntry{});
  if (p == 0) {
    m.intercept = mean(y);
    return m;
  }
  check_rank(x, names);

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(p + 1));
  design.col(0).setOnes();
  for (std::size_t c = 0; c < p; ++c) {
    design.col(static_cast<Eigen::Index>(c + 1)) =
        Eigen::Map<const Eigen::VectorXd>(x.column(c).data(), rows);
  }
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), rows);
  const Eigen::VectorXd w = design.householderQr().solve(target);
  m.intercept = w(0);
  m.coefficients.assign(w.data() + 1, w.data() + w.size());
  return m;
}

LinearModel fit_linear_pipeline(const Matrix& x, std::span<const double> y,
                                const std::vector<Variable>& names,
                                const preprocess::TransformSpec& transform) {
  const Matrix transformed = preprocess::apply_transform(x, names, transform);
  for (std::size_t c = 0; c < transformed.cols(); ++c) {
    for (double v : transformed.column(c)) {
      if (!std::isfinite(v)) {
        throw DataError("predictor " + std::string(to_string(names[c])) +
                        " has a missing or untransformable training value");
      }
    }
  }
  const auto scaling = preprocess::fit_scaler(transformed);
  LinearModel m = fit_ols(preprocess::scale(transformed, scaling), y, names);
  m.transform = transform;
  m.scaling = scaling;
  return m;
}

std::vector<double> predict_linear(const LinearModel& m, const Matrix& rows) {
  const std::size_t p = m.coefficients.size();
  const bool named = m.predictor_names.size() == p;
  if (rows.cols() != p || m.scaling.columns.size() != p) {
    throw DataError("predict_linear: expected " + std::to_string(m.coefficients.size()) +
                    " predictor columns, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    double acc = m.intercept;
    for (std::size_t c = 0; c < p; ++c) {
      const double raw = rows(r, c);
      const double t = named ? preprocess::apply_transform(m.transform.kind(m.predictor_names[c]), raw)
                             : raw;
      const auto& s = m.scaling.columns[c];
      acc += m.coefficients[c] * ((t - s.mean) / s.sd);
    }
    out[r] = std::isfinite(acc) ? acc : std::nan("");
  }
  return out;
}

}  // namespace softsensor::linear
