#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "hnn/bench.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>

using namespace hnn;
using hnn::testing::toy_panel;

namespace {

ForecastRecord rec(Quarter origin, const std::string& model, double forecast, double realized) {
  ForecastRecord r;
  r.origin = origin;
  r.model = model;
  r.forecast = forecast;
  r.realized = realized;
  r.has_realized = true;
  return r;
}

Vector ar4_series(int T, const Vector& phi, double c, double sd, Rng& rng) {
  Vector x = Vector::Zero(T);
  for (int t = 4; t < T; ++t) {
    x[t] = c + phi[0] * x[t - 1] + phi[1] * x[t - 2] + phi[2] * x[t - 3] + phi[3] * x[t - 4] +
           sd * rng.normal();
  }
  return x;
}

}  // namespace

TEST_CASE("rmse of perfect forecasts is zero, constant error d gives d") {
  std::vector<ForecastRecord> records;
  for (int i = 0; i < 10; ++i) {
    records.push_back(rec(Quarter(2000, 1) + i, "m", 1.0 + i, 1.0 + i));
    records.push_back(rec(Quarter(2000, 1) + i, "d", 1.0 + i + 0.3, 1.0 + i));
  }
  CHECK(rmse(records, "m", {}).value == 0.0);
  CHECK(rmse(records, "d", {}).value == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("rmse matches the direct formula and the AR(4) ratio is exact") {
  Rng rng(1);
  std::vector<ForecastRecord> records;
  double acc_m = 0.0, acc_ar = 0.0;
  const int n = 24;
  for (int i = 0; i < n; ++i) {
    const double y = rng.normal();
    const double fm = y + rng.normal();
    const double fa = y + rng.normal();
    records.push_back(rec(Quarter(2000, 1) + i, "m", fm, y));
    records.push_back(rec(Quarter(2000, 1) + i, "ar4", fa, y));
    acc_m += (fm - y) * (fm - y);
    acc_ar += (fa - y) * (fa - y);
  }
  const RmseResult rm = rmse(records, "m", {});
  CHECK(rm.value == doctest::Approx(std::sqrt(acc_m / n)).epsilon(1e-12));
  CHECK(rm.n == n);
  CHECK(rm.ratio_to_ar4 ==
        doctest::Approx(std::sqrt(acc_m / n) / std::sqrt(acc_ar / n)).epsilon(1e-12));
  CHECK(rmse(records, "ar4", {}).ratio_to_ar4 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("exclusion windows drop origins; a fully excluded set errors") {
  std::vector<ForecastRecord> records;
  records.push_back(rec(Quarter(2020, 1), "m", 5.0, 0.0));
  records.push_back(rec(Quarter(2020, 2), "m", 1.0, 1.0));
  const std::vector<Quarter> drop_q1 = {Quarter(2020, 1)};
  CHECK(rmse(records, "m", drop_q1).value == 0.0);
  CHECK(rmse(records, "m", drop_q1).n == 1);
  const std::vector<Quarter> all = {Quarter(2020, 1), Quarter(2020, 2)};
  CHECK_THROWS_AS(rmse(records, "m", all), DataError);
}

TEST_CASE("appending a zero-error record never increases the rmse") {
  Rng rng(2);
  std::vector<ForecastRecord> records;
  for (int i = 0; i < 15; ++i) {
    const double y = rng.normal();
    records.push_back(rec(Quarter(2001, 1) + i, "m", y + rng.normal(), y));
  }
  for (int extra = 0; extra < 10; ++extra) {
    const double before = rmse(records, "m", {}).value;
    records.push_back(rec(Quarter(2010, 1) + extra, "m", 1.0, 1.0));
    CHECK(rmse(records, "m", {}).value <= before);
  }
}

TEST_CASE("AR(4) coefficients are recovered on simulated data") {
  Rng rng(3);
  Vector phi(4);
  phi << 0.5, 0.2, -0.1, 0.05;
  const Vector x = ar4_series(5000, phi, 0.3, 1e-4, rng);
  const Vector beta = fit_ar(x, 4);
  CHECK(beta[0] == doctest::Approx(0.3).epsilon(1e-4));
  for (int l = 0; l < 4; ++l) CHECK(beta[l + 1] == doctest::Approx(phi[l]).epsilon(2e-3));

  // near-noiseless: recovery to 1e-6
  Rng rng2(4);
  const Vector exact = ar4_series(5000, phi, 0.3, 1e-9, rng2);
  const Vector beta_exact = fit_ar(exact, 4);
  for (int l = 0; l < 4; ++l) CHECK(std::abs(beta_exact[l + 1] - phi[l]) < 1e-6);
}

TEST_CASE("least squares matches a textbook normal-equations solution") {
  Rng rng(5);
  Vector phi(4);
  phi << 0.4, 0.15, 0.1, -0.2;
  const Vector x = ar4_series(400, phi, 0.1, 1.0, rng);
  const Vector beta = fit_ar(x, 4);

  // independent route: beta = (X'X)^{-1} X'y
  const Eigen::Index n = x.size() - 4;
  Matrix X(n, 5);
  Vector y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    X(t, 0) = 1.0;
    for (int l = 1; l <= 4; ++l) X(t, l) = x[t + 4 - l];
    y[t] = x[t + 4];
  }
  const Vector oracle = (X.transpose() * X).inverse() * (X.transpose() * y);
  CHECK((beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("white noise forecasts collapse to the sample mean") {
  Rng rng(6);
  Vector x(2000);
  for (int t = 0; t < 2000; ++t) x[t] = 0.7 + rng.normal();
  const double forecast = bench_ar4(x, 1);
  CHECK(forecast == doctest::Approx(x.mean()).epsilon(0.15));
  const Vector beta = fit_ar(x, 4);
  for (int l = 1; l <= 4; ++l) CHECK(std::abs(beta[l]) < 0.08);  // ~4 se under the null
}

TEST_CASE("iterated AR(4) horizon means match a hand iteration") {
  Rng rng(7);
  Vector phi(4);
  phi << 0.6, 0.1, 0.05, -0.05;
  const Vector x = ar4_series(300, phi, 0.2, 0.5, rng);
  const Vector beta = fit_ar(x, 4);
  double l1 = x[299], l2 = x[298], l3 = x[297], l4 = x[296];
  double acc = 0.0, last = 0.0;
  for (int step = 0; step < 4; ++step) {
    const double next = beta[0] + beta[1] * l1 + beta[2] * l2 + beta[3] * l3 + beta[4] * l4;
    l4 = l3; l3 = l2; l2 = l1; l1 = next;
    acc += next;
    last = next;
  }
  CHECK(bench_ar4(x, 4, TargetAggregation::MeanOverHorizon) ==
        doctest::Approx(acc / 4.0).epsilon(1e-12));
  CHECK(bench_ar4(x, 4, TargetAggregation::OneStep) == doctest::Approx(last).epsilon(1e-12));
}

TEST_CASE("rolling means") {
  CHECK(bench_rolling_mean(Vector::Constant(50, 2.2), 4) == doctest::Approx(2.2));
  Vector ramp(4);
  ramp << 1, 2, 3, 4;
  CHECK(bench_rolling_mean(ramp, 4) == doctest::Approx(2.5));
  CHECK(bench_rolling_mean(ramp, 1) == doctest::Approx(4.0));
  CHECK_THROWS_AS(bench_rolling_mean(ramp, 5), NumericalError);
}

TEST_CASE("the rolling regression recovers a planted linear relation") {
  Rng rng(8);
  const int T = 200;
  Vector gap(T), x(T);
  for (int t = 0; t < T; ++t) gap[t] = rng.normal();
  // pi_{t+1} = 0.2 + 0.5 pi_t - 0.25 pi_{t-1} + 0.8 gap_t + tiny noise
  x[0] = 0.0;
  x[1] = 0.1;
  for (int t = 1; t + 1 < T; ++t) {
    x[t + 1] = 0.2 + 0.5 * x[t] - 0.25 * x[t - 1] + 0.8 * gap[t] + 1e-8 * rng.normal();
  }
  const double forecast = bench_pc(x, 1, TargetAggregation::OneStep, gap, {}, 60);
  const double expected = 0.2 + 0.5 * x[T - 1] - 0.25 * x[T - 2] + 0.8 * gap[T - 1];
  CHECK(forecast == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("a zero-signal regression forecasts near the intercept") {
  Rng rng(9);
  const int T = 400;
  Vector gap(T), x(T);
  for (int t = 0; t < T; ++t) {
    gap[t] = rng.normal();
    x[t] = 1.5 + 0.05 * rng.normal();
  }
  const double forecast = bench_pc(x, 1, TargetAggregation::OneStep, gap, {}, 300);
  CHECK(forecast == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("window covering the whole sample reproduces expanding least squares") {
  Rng rng(10);
  const int T = 120;
  Vector gap(T), x(T);
  x[0] = 0.0;
  for (int t = 0; t + 1 < T; ++t) {
    gap[t] = rng.normal();
    x[t + 1] = 0.1 + 0.3 * x[t] + 0.5 * gap[t] + 0.2 * rng.normal();
  }
  gap[T - 1] = rng.normal();
  const double windowed = bench_pc(x, 1, TargetAggregation::OneStep, gap, {}, 100000);
  // expanding OLS oracle over every usable row
  const Eigen::Index n = T - 2;
  Matrix X(n, 4);
  Vector y(n);
  for (Eigen::Index t = 1; t <= n; ++t) {
    X(t - 1, 0) = 1.0;
    X(t - 1, 1) = x[t];
    X(t - 1, 2) = x[t - 1];
    X(t - 1, 3) = gap[t];
    y[t - 1] = x[t + 1];
  }
  const Vector beta = (X.transpose() * X).inverse() * (X.transpose() * y);
  const double expected = beta[0] + beta[1] * x[T - 1] + beta[2] * x[T - 2] + beta[3] * gap[T - 1];
  CHECK(windowed == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("external forecasts scored at zero error give zero rmse") {
  const RawPanel panel = toy_panel(140, 20);
  TargetSpec target;
  target.mnemonic = "CPI";
  const Vector pi = target_series(panel, target);

  OosPlan plan;
  plan.first_origin = Quarter(1990, 1);
  plan.last_origin = Quarter(1990, 1);
  plan.estimation_start = Quarter(1961, 1);

  // perfect-foresight import file
  const std::string path = "/tmp/hnn_test_external.csv";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "origin,value\n";
    const Eigen::Index row = panel.index_of(plan.first_origin);
    out << plan.first_origin.str() << ',' << pi[row + 1] << '\n';
  }

  OosSettings settings;
  settings.target = target;
  settings.run_network = false;
  BenchmarkSet benchmarks;
  benchmarks.external_csv["oracle"] = path;
  const OosResult result = run_oos(panel, settings, plan, benchmarks);
  CHECK(rmse(result.records, "oracle", {}).value == 0.0);
  CHECK(rmse(result.records, "ar4", {}).ratio_to_ar4 == doctest::Approx(1.0));
}

TEST_CASE("benchmarks are deterministic and the harness audits leakage") {
  RawPanel panel = toy_panel(160, 30);
  TargetSpec target;
  target.mnemonic = "CPI";

  OosPlan plan;
  plan.first_origin = Quarter(1994, 1);
  plan.last_origin = Quarter(1995, 4);
  plan.estimation_start = Quarter(1961, 1);
  plan.nn_cadence = 4;

  OosSettings settings;
  settings.target = target;
  settings.hemispheres = {
      HemisphereSpec{"activity", {"EMP", "HOURS"}, true, HemisphereRole::State},
      HemisphereSpec{"prices", {"SURVEY", "Y"}, true, HemisphereRole::State},
  };
  settings.arch.variant = Variant::Factorized;
  settings.arch.state_layers = 2;
  settings.arch.state_width = 8;
  settings.arch.coef_layers = 1;
  settings.arch.coef_width = 4;
  settings.train.max_epochs = 5;
  settings.train.ensemble_size = 2;
  settings.train.dropout = 0.0;
  settings.train.seed = 7;
  BenchmarkSet benchmarks;

  const OosResult a = run_oos(panel, settings, plan, benchmarks);
  const OosResult b = run_oos(panel, settings, plan, benchmarks);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].forecast == b.records[i].forecast);
  }

  // future data must not move any forecast
  RawPanel mutated = panel;
  const Eigen::Index cut = panel.index_of(plan.last_origin);
  for (auto& [name, col] : mutated.columns) {
    for (Eigen::Index t = cut + 1; t < mutated.rows(); ++t) col[t] *= 3.0;
  }
  const OosResult c = run_oos(mutated, settings, plan, benchmarks);
  REQUIRE(c.records.size() == a.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].forecast == c.records[i].forecast);
  }
}

TEST_CASE("summaries carry inclusion counts for the exclusion windows") {
  std::vector<ForecastRecord> records;
  for (int i = 0; i < 8; ++i) {
    const double y = 0.1 * i;
    records.push_back(rec(Quarter(2019, 1) + i, "ar4", y + 0.2, y));
    records.push_back(rec(Quarter(2019, 1) + i, "m", y + 0.1, y));
  }
  const std::vector<Quarter> exclusions = {Quarter(2020, 1), Quarter(2020, 2)};
  const auto summary = summarize_records(records, exclusions);
  REQUIRE(summary.size() == 2);
  for (const auto& row : summary) {
    CHECK(row.n_included == 6);
    CHECK(row.n_excluded == 2);
  }
}
