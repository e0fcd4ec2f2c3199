#include "softsensor/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "softsensor/error.hpp"
#include "softsensor/numeric.hpp"

namespace softsensor::preprocess {

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity: return "identity";
    case TransformKind::NaturalLog: return "log";
    case TransformKind::Cube: return "cube";
  }
  return "?";
}

TransformKind transform_kind_from_string(std::string_view name) {
  if (name == "identity" || name == "none") return TransformKind::Identity;
  if (name == "log" || name == "ln" || name == "natural_log") return TransformKind::NaturalLog;
  if (name == "cube") return TransformKind::Cube;
  throw ConfigError("unknown transform '" + std::string(name) + "'");
}

TransformKind TransformSpec::kind(Variable v) const {
  auto it = kinds.find(v);
  return it == kinds.end() ? TransformKind::Identity : it->second;
}

double skewness(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw NumericalError("skewness needs at least 3 values");
  const double m = mean(x);
  std::vector<double> d2(n), d3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m;
    d2[i] = d * d;
    d3[i] = d * d * d;
  }
  const double m2 = pairwise_sum(d2) / static_cast<double>(n);
  const double m3 = pairwise_sum(d3) / static_cast<double>(n);
  if (!(m2 > 0.0)) throw NumericalError("skewness undefined for zero variance");
  const double g1 = m3 / std::pow(m2, 1.5);
  const double nn = static_cast<double>(n);
  return g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
}

TransformSpec suggest_transforms(const dataio::Dataset& d, double threshold,
                                 const std::vector<Variable>& columns) {
  if (!(threshold > 0.0)) throw ConfigError("skew threshold must be positive");
  TransformSpec spec;
  const auto vars = columns.empty() ? d.variables() : columns;
  for (Variable v : vars) {
    std::vector<double> present;
    for (double x : d.column(v)) {
      if (!std::isnan(x)) present.push_back(x);
    }
    if (present.size() < 3) continue;
    double g;
    try {
      g = skewness(present);
    } catch (const NumericalError&) {
      continue;
    }
    const bool positive =
        std::all_of(present.begin(), present.end(), [](double x) { return x > 0.0; });
    if (g > threshold && positive) {
      spec.kinds[v] = TransformKind::NaturalLog;
    } else if (g < -threshold) {
      spec.kinds[v] = TransformKind::Cube;
    }
  }
  return spec;
}

double apply_transform(TransformKind kind, double x) {
  switch (kind) {
    case TransformKind::Identity: return x;
    case TransformKind::NaturalLog: return x > 0.0 ? std::log(x) : std::nan("");
    case TransformKind::Cube: return x * x * x;
  }
  return x;
}

dataio::Dataset apply_transform(const dataio::Dataset& d, const TransformSpec& spec) {
  dataio::Dataset out = d;
  for (auto& [v, col] : out.columns) {
    const TransformKind kind = spec.kind(v);
    if (kind == TransformKind::Identity) continue;
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (std::isnan(col[r])) continue;
      if (kind == TransformKind::NaturalLog && !(col[r] > 0.0)) {
        throw DataError("natural log of non-positive value " + std::to_string(col[r]) +
                        " in column " + std::string(softsensor::to_string(v)) + " at row " +
                        std::to_string(r));
      }
      col[r] = apply_transform(kind, col[r]);
    }
  }
  return out;
}

Matrix apply_transform(const Matrix& x, const std::vector<Variable>& vars,
                       const TransformSpec& spec) {
  Matrix out = x;
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const TransformKind kind = spec.kind(vars[c]);
    if (kind == TransformKind::Identity) continue;
    for (double& v : out.column(c)) v = apply_transform(kind, v);
  }
  return out;
}

ScalingParams fit_scaler(const Matrix& x, std::span<const std::size_t> training_rows) {
  ScalingParams params;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto values = select(x.column(c), training_rows);
    ScaleEntry e;
    e.mean = mean(values);
    e.sd = standard_deviation(values, 0);
    if (!(e.sd > 0.0) || !std::isfinite(e.sd)) {
      throw NumericalError("cannot scale column " + std::to_string(c) +
                           ": zero variance on training rows");
    }
    params.columns.push_back(e);
  }
  return params;
}

ScalingParams fit_scaler(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  return fit_scaler(x, all);
}

Matrix scale(const Matrix& x, const ScalingParams& params) {
  if (params.columns.size() != x.cols()) {
    throw DataError("scaling parameters cover " + std::to_string(params.columns.size()) +
                    " columns, matrix has " + std::to_string(x.cols()));
  }
  Matrix out = x;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto& e = params.columns[c];
    for (double& v : out.column(c)) v = (v - e.mean) / e.sd;
  }
  return out;
}

Matrix unscale(const Matrix& x, const ScalingParams& params) {
  Matrix out = x;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto& e = params.columns.at(c);
    for (double& v : out.column(c)) v = v * e.sd + e.mean;
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson_r: length mismatch");
  if (x.size() < 2) throw DataError("pearson_r: need at least 2 observations");
  const double mx = mean(x);
  const double my = mean(y);
  const std::size_t n = x.size();
  std::vector<double> sxy(n), sxx(n), syy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy[i] = dx * dy;
    sxx[i] = dx * dx;
    syy[i] = dy * dy;
  }
  const double vx = pairwise_sum(sxx);
  const double vy = pairwise_sum(syy);
  if (!(vx > 0.0) || !(vy > 0.0)) {
    throw NumericalError("pearson_r undefined for a zero-variance input");
  }
  const double r = pairwise_sum(sxy) / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<Correlation> correlation_table(const dataio::Dataset& d, Variable target,
                                           const std::vector<Variable>& predictors) {
  const auto y = d.column(target);
  std::vector<Correlation> table;
  for (Variable p : predictors) {
    const auto x = d.column(p);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::isnan(x[i]) || std::isnan(y[i])) continue;
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
    table.push_back({p, pearson_r(xs, ys)});
  }
  std::stable_sort(table.begin(), table.end(), [](const Correlation& a, const Correlation& b) {
    const double fa = std::abs(a.r), fb = std::abs(b.r);
    if (fa != fb) return fa > fb;
    return a.predictor < b.predictor;
  });
  return table;
}

}  // namespace softsensor::preprocess
