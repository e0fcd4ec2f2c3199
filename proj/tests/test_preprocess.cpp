#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "softsensor/error.hpp"
#include "softsensor/preprocess.hpp"
#include "support.hpp"

using namespace softsensor;
using preprocess::TransformKind;

namespace {

// Direct evaluation of the adjusted Fisher-Pearson coefficient.
double skew_oracle(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m3 += (v - mean) * (v - mean) * (v - mean);
  }
  m2 /= n;
  m3 /= n;
  return m3 / std::pow(m2, 1.5) * std::sqrt(n * (n - 1)) / (n - 2);
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

dataio::Dataset dataset_of(std::map<Variable, std::vector<double>> cols) {
  dataio::Dataset d;
  d.columns = std::move(cols);
  for (std::size_t i = 0; i < d.columns.begin()->second.size(); ++i) d.timestamps.push_back(i);
  return d;
}

}  // namespace

TEST_CASE("skewness") {
  CHECK(preprocess::skewness(std::vector<double>{1, 2, 3}) == doctest::Approx(0.0));
  CHECK(preprocess::skewness(std::vector<double>{1, 1, 1, 10}) > 0);

  const std::vector<double> spike = {0, 0, 0, 0, 1};
  CHECK(preprocess::skewness(spike) == doctest::Approx(skew_oracle(spike)).epsilon(1e-12));
  CHECK(preprocess::skewness(spike) == doctest::Approx(2.2360680).epsilon(1e-7));

  std::mt19937_64 gen(3);
  std::gamma_distribution<double> g(2.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(30);
    for (auto& v : x) v = g(gen);
    CHECK(preprocess::skewness(x) == doctest::Approx(skew_oracle(x)).epsilon(1e-10));
  }

  CHECK_THROWS_AS(preprocess::skewness(std::vector<double>{4, 4, 4}), NumericalError);
  CHECK_THROWS(preprocess::skewness(std::vector<double>{1, 2}));
}

TEST_CASE("suggest_transforms") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> normal(2000), lognormal(2000), left(2000), shifted(2000);
  for (std::size_t i = 0; i < normal.size(); ++i) {
    normal[i] = z(gen);
    lognormal[i] = std::exp(z(gen));
    left[i] = -std::exp(z(gen)) + 100;
    shifted[i] = std::exp(z(gen)) - 1.5;  // right-skewed with negative values
  }
  const auto d = dataset_of({{Variable::Temp, normal},
                             {Variable::Turb, lognormal},
                             {Variable::EC, left},
                             {Variable::Chl, shifted}});
  const auto spec = preprocess::suggest_transforms(d, 0.5);
  CHECK(spec.kind(Variable::Temp) == TransformKind::Identity);
  CHECK(spec.kind(Variable::Turb) == TransformKind::NaturalLog);
  CHECK(spec.kind(Variable::EC) == TransformKind::Cube);
  CHECK(spec.kind(Variable::Chl) == TransformKind::Identity);

  SUBCASE("independent of the order columns are listed") {
    const auto a = preprocess::suggest_transforms(d, 0.5, {Variable::Temp, Variable::Turb, Variable::EC});
    const auto b = preprocess::suggest_transforms(d, 0.5, {Variable::EC, Variable::Turb, Variable::Temp});
    CHECK(a == b);
    CHECK(a.kind(Variable::Turb) == TransformKind::NaturalLog);
  }
}

TEST_CASE("apply_transform") {
  CHECK(preprocess::apply_transform(TransformKind::NaturalLog, 1.0) == 0.0);
  CHECK(preprocess::apply_transform(TransformKind::Cube, 2.0) == 8.0);
  CHECK(preprocess::apply_transform(TransformKind::Identity, 2.5) == 2.5);

  const auto d = dataset_of({{Variable::Turb, {1.0, 2.0, 0.0}}, {Variable::EC, {1.5, -2.0, 3.0}}});
  const auto same = preprocess::apply_transform(d, preprocess::TransformSpec{});
  CHECK(same.columns == d.columns);

  preprocess::TransformSpec spec;
  spec.kinds[Variable::EC] = TransformKind::Cube;
  const auto cubed = preprocess::apply_transform(d, spec);
  CHECK(cubed.column(Variable::EC)[1] == -8.0);
  CHECK(cubed.column(Variable::Turb)[2] == 0.0);

  spec.kinds[Variable::Turb] = TransformKind::NaturalLog;
  CHECK_THROWS_WITH_AS(preprocess::apply_transform(d, spec),
                       doctest::Contains("Turb"), DataError);
  try {
    preprocess::apply_transform(d, spec);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("fit_scaler and scale") {
  SUBCASE("[1,2,3] under the population sd") {
    const Matrix x = Matrix::from_columns({{1, 2, 3}});
    const auto z = preprocess::scale(x, preprocess::fit_scaler(x));
    const double sd = std::sqrt(2.0 / 3.0);
    CHECK(z(0, 0) == doctest::Approx(-1 / sd).epsilon(1e-14));
    CHECK(z(1, 0) == doctest::Approx(0.0));
    CHECK(z(2, 0) == doctest::Approx(1 / sd).epsilon(1e-14));
    CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  }
  SUBCASE("[0,2]") {
    const Matrix x = Matrix::from_columns({{0, 2}});
    const auto z = preprocess::scale(x, preprocess::fit_scaler(x));
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
  }
  SUBCASE("constant column") {
    CHECK_THROWS_AS(preprocess::fit_scaler(Matrix::from_columns({{3, 3, 3}})), NumericalError);
  }
  SUBCASE("training rows define the parameters") {
    const Matrix x = Matrix::from_columns({{0, 2, 100}});
    const std::vector<std::size_t> rows = {0, 1};
    const auto params = preprocess::fit_scaler(x, rows);
    CHECK(params.columns[0].mean == 1.0);
    CHECK(params.columns[0].sd == 1.0);
    CHECK(preprocess::scale(x, params)(2, 0) == 99.0);
  }
  SUBCASE("properties on random data") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int t = 0; t < 30; ++t) {
      Matrix x = testing::random_matrix(40, 3, gen);
      for (std::size_t r = 0; r < 40; ++r) x(r, 1) = 1000 + 25 * x(r, 1) + u(gen);
      const auto params = preprocess::fit_scaler(x);
      const auto z = preprocess::scale(x, params);
      for (std::size_t c = 0; c < 3; ++c) {
        double m = 0, ss = 0;
        for (double v : z.column(c)) m += v;
        m /= 40;
        for (double v : z.column(c)) ss += (v - m) * (v - m);
        CHECK(std::abs(m) < 1e-10);
        CHECK(std::abs(std::sqrt(ss / 40) - 1) < 1e-10);
      }
      const auto back = preprocess::unscale(z, params);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t r = 0; r < 40; ++r) CHECK(testing::close_rel(back(r, c), x(r, c), 1e-10));
      }
      const auto again = preprocess::scale(z, preprocess::fit_scaler(z));
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t r = 0; r < 40; ++r) CHECK(std::abs(again(r, c) - z(r, c)) < 1e-10);
      }
    }
  }
}

TEST_CASE("pearson_r") {
  const std::vector<double> a = {1, 2, 3};
  CHECK(preprocess::pearson_r(a, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
  CHECK(preprocess::pearson_r(a, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  const std::vector<double> x = {1, 2, 3, 4}, y = {1, 3, 2, 4};
  CHECK(preprocess::pearson_r(x, y) == doctest::Approx(pearson_oracle(x, y)).epsilon(1e-14));
  CHECK(preprocess::pearson_r(x, y) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK_THROWS_AS(preprocess::pearson_r(x, std::vector<double>{2, 2, 2, 2}), NumericalError);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> u(25), v(25);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = z(gen);
      v[i] = 0.5 * u[i] + z(gen);
    }
    const double r = preprocess::pearson_r(u, v);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(r == doctest::Approx(preprocess::pearson_r(v, u)).epsilon(1e-12));
    CHECK(r == doctest::Approx(pearson_oracle(u, v)).epsilon(1e-10));
    const double scale = z(gen) * 10;
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = scale * u[i] + 3.0;
    const double sign = scale > 0 ? 1.0 : -1.0;
    CHECK(preprocess::pearson_r(w, v) == doctest::Approx(sign * r).epsilon(1e-10));
  }
}

TEST_CASE("correlation_table") {
  const auto d = dataset_of({{Variable::TRP, {1, 2, 3, 4, 5}},
                             {Variable::EC, {2, 4, 5, 8, 10}},
                             {Variable::Temp, {5, 4, 3, 2, 1}},
                             {Variable::pH, {1, 2, 3, 4, 5}},
                             {Variable::Chl, {1, 3, 2, 5, 1}}});
  const auto t = preprocess::correlation_table(
      d, Variable::TRP, {Variable::Chl, Variable::EC, Variable::TRP, Variable::Temp, Variable::pH});
  REQUIRE(t.size() == 5);
  // |r| = 1 ties resolve in canonical order: Temp, pH, TRP.
  CHECK(t[0].predictor == Variable::Temp);
  CHECK(t[1].predictor == Variable::pH);
  CHECK(t[2].predictor == Variable::TRP);
  CHECK(t[2].r == doctest::Approx(1.0));
  CHECK(t[0].r == doctest::Approx(-1.0));
  CHECK(t[3].predictor == Variable::EC);
  CHECK(t[4].predictor == Variable::Chl);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::abs(t[i - 1].r) >= std::abs(t[i].r));

  SUBCASE("two rows give |r| = 1 for any non-constant pair") {
    const auto two = dataset_of({{Variable::TRP, {0.1, 0.3}}, {Variable::EC, {500, 400}}, {Variable::Flow, {1, 9}}});
    for (const auto& c : preprocess::correlation_table(two, Variable::TRP, {Variable::EC, Variable::Flow})) {
      CHECK(std::abs(c.r) == doctest::Approx(1.0));
    }
  }
}
