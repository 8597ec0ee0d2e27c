#include "hnn/bench.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hnn {

void OosPlan::validate() const {
  if (last_origin < first_origin) throw ConfigError("last origin precedes first origin");
  if (nn_cadence < 1 || bench_cadence < 1) throw ConfigError("re-estimation cadence must be >= 1");
}

namespace {

bool excluded(Quarter origin, const std::vector<Quarter>& exclusions) {
  return std::find(exclusions.begin(), exclusions.end(), origin) != exclusions.end();
}

double rmse_over(const std::vector<const ForecastRecord*>& records) {
  double acc = 0.0;
  for (const auto* r : records) {
    const double e = r->forecast - r->realized;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(records.size()));
}

Vector ols(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size() || X.rows() < X.cols()) throw NumericalError("singular design");
  const auto qr = X.colPivHouseholderQr();
  if (qr.rank() < X.cols()) throw NumericalError("singular design");
  return qr.solve(y);
}

}  // namespace

RmseResult rmse(const std::vector<ForecastRecord>& records, const std::string& model,
                const std::vector<Quarter>& exclusions) {
  std::vector<const ForecastRecord*> own;
  std::vector<Quarter> origins;
  for (const auto& r : records) {
    if (r.model == model && r.has_realized && !excluded(r.origin, exclusions)) {
      own.push_back(&r);
      origins.push_back(r.origin);
    }
  }
  if (own.empty()) throw DataError("no scorable forecasts for model '" + model + "'");

  RmseResult out;
  out.value = rmse_over(own);
  out.n = static_cast<int>(own.size());

  std::vector<const ForecastRecord*> ar4;
  for (const auto& r : records) {
    if (r.model == "ar4" && r.has_realized &&
        std::find(origins.begin(), origins.end(), r.origin) != origins.end()) {
      ar4.push_back(&r);
    }
  }
  out.ratio_to_ar4 = ar4.size() == origins.size() && !ar4.empty()
                         ? out.value / rmse_over(ar4)
                         : std::numeric_limits<double>::quiet_NaN();
  return out;
}

Vector fit_ar(const Vector& history, int lags) {
  const Eigen::Index T = history.size();
  if (T < lags + 10) throw NumericalError("history too short for AR fit");
  const Eigen::Index n = T - lags;
  Matrix X(n, lags + 1);
  Vector y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    X(t, 0) = 1.0;
    for (int l = 1; l <= lags; ++l) X(t, l) = history[t + lags - l];
    y[t] = history[t + lags];
  }
  return ols(X, y);
}

double ar_forecast(const Vector& beta, const Vector& history, int s,
                   TargetAggregation aggregation) {
  const int lags = static_cast<int>(beta.size()) - 1;
  if (history.size() < lags) throw NumericalError("history shorter than the AR order");
  std::vector<double> recent;
  for (int l = 1; l <= lags; ++l) recent.push_back(history[history.size() - l]);
  double acc = 0.0;
  double last = 0.0;
  for (int step = 0; step < s; ++step) {
    double next = beta[0];
    for (int l = 0; l < lags; ++l) next += beta[l + 1] * recent[static_cast<size_t>(l)];
    recent.insert(recent.begin(), next);
    recent.pop_back();
    acc += next;
    last = next;
  }
  return aggregation == TargetAggregation::MeanOverHorizon ? acc / s : last;
}

double bench_ar4(const Vector& history, int s, TargetAggregation aggregation) {
  if (history.size() < 40) throw NumericalError("AR(4) benchmark needs at least 40 observations");
  return ar_forecast(fit_ar(history, 4), history, s, aggregation);
}

double bench_rolling_mean(const Vector& history, int window) {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (history.size() < window) throw NumericalError("history shorter than rolling window");
  return history.tail(window).mean();
}

namespace {

void pc_regressors(const Vector& history, const Vector& gap, const std::vector<Vector>& extras,
                   Eigen::Index t, Eigen::Index row, Matrix& X) {
  X(row, 0) = 1.0;
  X(row, 1) = history[t];
  X(row, 2) = history[t - 1];
  X(row, 3) = gap[t];
  for (size_t e = 0; e < extras.size(); ++e) {
    X(row, 4 + 2 * static_cast<Eigen::Index>(e)) = extras[e][t];
    X(row, 5 + 2 * static_cast<Eigen::Index>(e)) = extras[e][t - 1];
  }
}

}  // namespace

Vector fit_pc(const Vector& history, int s, TargetAggregation aggregation, const Vector& gap,
              const std::vector<Vector>& extras, int window) {
  const Eigen::Index T = history.size();
  if (gap.size() != T) throw DataError("gap series length mismatch");
  for (const auto& x : extras) {
    if (x.size() != T) throw DataError("extra regressor length mismatch");
  }
  const Eigen::Index k = 3 + 1 + 2 * static_cast<Eigen::Index>(extras.size());

  // Rows t usable for fitting have the full future window observed.
  const Eigen::Index last_obs_row = T - 1 - s;
  const Eigen::Index first_row = std::max<Eigen::Index>(1, last_obs_row - window + 1);
  if (last_obs_row - first_row + 1 < k + 2) throw NumericalError("window exceeding history");

  const Eigen::Index n = last_obs_row - first_row + 1;
  Matrix X(n, k);
  Vector y(n);
  for (Eigen::Index t = first_row; t <= last_obs_row; ++t) {
    pc_regressors(history, gap, extras, t, t - first_row, X);
    if (aggregation == TargetAggregation::MeanOverHorizon) {
      y[t - first_row] = history.segment(t + 1, s).mean();
    } else {
      y[t - first_row] = history[t + s];
    }
  }
  if (X.hasNaN() || y.hasNaN()) throw DataError("missing values inside the regression window");
  return ols(X, y);
}

double pc_forecast(const Vector& beta, const Vector& history, const Vector& gap,
                   const std::vector<Vector>& extras) {
  Matrix x_now(1, beta.size());
  pc_regressors(history, gap, extras, history.size() - 1, 0, x_now);
  if (x_now.hasNaN()) throw DataError("missing values in the forecast-origin regressors");
  return (x_now * beta)(0, 0);
}

double bench_pc(const Vector& history, int s, TargetAggregation aggregation, const Vector& gap,
                const std::vector<Vector>& extras, int window) {
  return pc_forecast(fit_pc(history, s, aggregation, gap, extras, window), history, gap, extras);
}

std::vector<RmseSummaryRow> summarize_records(const std::vector<ForecastRecord>& records,
                                              const std::vector<Quarter>& exclusions) {
  std::vector<std::string> models;
  for (const auto& r : records) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  }
  std::vector<RmseSummaryRow> rows;
  for (const auto& model : models) {
    RmseSummaryRow row;
    row.model = model;
    const RmseResult all = rmse(records, model, {});
    row.rmse_all = all.value;
    row.ratio_all = all.ratio_to_ar4;
    try {
      const RmseResult excl = rmse(records, model, exclusions);
      row.rmse_excl = excl.value;
      row.ratio_excl = excl.ratio_to_ar4;
      row.n_included = excl.n;
      row.n_excluded = all.n - excl.n;
    } catch (const DataError&) {
      row.rmse_excl = std::numeric_limits<double>::quiet_NaN();
      row.ratio_excl = std::numeric_limits<double>::quiet_NaN();
      row.n_included = 0;
      row.n_excluded = all.n;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ForecastRecord> load_external_forecasts(const std::string& path,
                                                    const std::string& model_id, int horizon) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open external forecast file: " + path);
  std::vector<ForecastRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(", \t\r\n") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string origin_cell, value_cell;
    std::getline(ss, origin_cell, ',');
    std::getline(ss, value_cell, ',');
    if (first && origin_cell.find_first_of("0123456789") == std::string::npos) {
      first = false;  // header row
      continue;
    }
    first = false;
    ForecastRecord r;
    r.origin = Quarter::parse(origin_cell);
    r.model = model_id;
    r.horizon = horizon;
    r.forecast = std::stod(value_cell);
    records.push_back(r);
  }
  return records;
}

namespace {

struct AlignedTarget {
  Vector series;              // transformed target aligned to panel rows (NaN head/tail)
  Eigen::Index first_obs = 0;
};

AlignedTarget aligned_target(const RawPanel& panel, const TargetSpec& target) {
  AlignedTarget out;
  out.series = target_series(panel, target);
  while (out.first_obs < out.series.size() && std::isnan(out.series[out.first_obs])) ++out.first_obs;
  return out;
}

double realized_value(const Vector& pi, Eigen::Index origin_row, const TargetSpec& target) {
  const int s = target.horizon;
  if (origin_row + s >= pi.size()) return std::numeric_limits<double>::quiet_NaN();
  if (target.aggregation == TargetAggregation::OneStep) return pi[origin_row + s];
  double acc = 0.0;
  for (int k = 1; k <= s; ++k) {
    if (std::isnan(pi[origin_row + k])) return std::numeric_limits<double>::quiet_NaN();
    acc += pi[origin_row + k];
  }
  return target.horizon_sum ? acc : acc / s;
}

}  // namespace

OosResult run_oos(const RawPanel& panel, const OosSettings& settings, const OosPlan& plan,
                  const BenchmarkSet& benchmarks) {
  plan.validate();
  settings.target.validate();
  if ((benchmarks.pc || benchmarks.pc_plus) && benchmarks.gap_mnemonic.empty()) {
    throw ConfigError("PC benchmarks need a gap mnemonic");
  }

  const AlignedTarget pi = aligned_target(panel, settings.target);
  const Eigen::Index est_start_row =
      std::max(panel.index_of(plan.estimation_start), pi.first_obs);
  const int s = settings.target.horizon;
  const double sum_scale = settings.target.horizon_sum ? static_cast<double>(s) : 1.0;

  OosResult result;
  FeatureSet features;        // rebuilt on the network cadence
  Ensemble ensemble;
  bool have_network = false;
  Vector ar_beta, pc_beta, pcp_beta;  // refit on the benchmark cadence

  const int n_origins = plan.last_origin - plan.first_origin + 1;
  for (int i = 0; i < n_origins; ++i) {
    const Quarter origin = plan.first_origin + i;
    const Eigen::Index origin_row = panel.index_of(origin);
    const double realized = realized_value(pi.series, origin_row, settings.target);

    const auto push = [&](const std::string& model, double forecast, double vol = 0.0,
                          bool has_vol = false) {
      ForecastRecord r;
      r.origin = origin;
      r.model = model;
      r.horizon = s;
      r.forecast = forecast;
      r.has_realized = std::isfinite(realized);
      r.realized = r.has_realized ? realized : 0.0;
      r.predicted_vol = vol;
      r.has_vol = has_vol;
      result.records.push_back(r);
    };

    if (settings.run_network) {
      if (!have_network || i % plan.nn_cadence == 0) {
        BuildOptions build = settings.build;
        build.sample_start = plan.estimation_start;
        features = build_features(panel, settings.hemispheres, settings.target, origin, build);
        TrainConfig cfg = settings.train;
        cfg.seed = derive_seed(settings.train.seed, 0xf0eca57ULL, static_cast<std::uint64_t>(i));
        ensemble = train_ensemble(settings.arch, features, cfg);
        have_network = true;
      }
      // Origin must be inside the feature sample and never ahead of it.
      const auto it = std::find(features.dates.begin(), features.dates.end(), origin);
      if (it == features.dates.end()) throw DataError("origin outside assembled sample");
      const int row = static_cast<int>(it - features.dates.begin());
      if (features.dates[static_cast<size_t>(row)] > origin || features.train_end > origin) {
        throw NumericalError("leakage audit failed: feature rows ahead of origin");
      }
      Vector pred_acc = Vector::Zero(1);
      Vector vol_acc = Vector::Zero(1);
      bool has_vol = false;
      const std::vector<int> row_ids = {row};
      for (const auto& member : ensemble.members) {
        const ModelInputs inputs = assemble_inputs(member.fit.model, features, row_ids);
        const ComponentOutput out = model_forward(member.fit.model, inputs, Mode::Eval);
        pred_acc[0] += out.prediction[0];
        if (out.volatility.size() > 0) {
          vol_acc[0] += out.volatility[0];
          has_vol = true;
        }
      }
      const double B = static_cast<double>(ensemble.members.size());
      push("hnn", pred_acc[0] / B, vol_acc[0] / B, has_vol);
    }

    {
      const bool refit = i % plan.bench_cadence == 0;
      const Eigen::Index len = origin_row - est_start_row + 1;
      const Vector history = pi.series.segment(est_start_row, len);
      if (benchmarks.ar4) {
        if (refit || ar_beta.size() == 0) {
          if (history.size() < 40) throw NumericalError("AR(4) benchmark needs >= 40 observations");
          ar_beta = fit_ar(history, 4);
        }
        push("ar4", sum_scale * ar_forecast(ar_beta, history, s, settings.target.aggregation));
      }
      if (benchmarks.mean_1y) push("mean_1y", sum_scale * bench_rolling_mean(history, 4));
      if (benchmarks.mean_10y) push("mean_10y", sum_scale * bench_rolling_mean(history, 40));
      if (benchmarks.pc || benchmarks.pc_plus) {
        const Vector gap = panel.column(benchmarks.gap_mnemonic).segment(est_start_row, len);
        if (benchmarks.pc) {
          if (refit || pc_beta.size() == 0) {
            pc_beta = fit_pc(history, s, settings.target.aggregation, gap, {});
          }
          push("pc", sum_scale * pc_forecast(pc_beta, history, gap, {}));
        }
        if (benchmarks.pc_plus) {
          std::vector<Vector> extras;
          for (const auto& m : benchmarks.extra_mnemonics) {
            extras.push_back(transformed_series(panel, m).segment(est_start_row, len));
          }
          if (refit || pcp_beta.size() == 0) {
            pcp_beta = fit_pc(history, s, settings.target.aggregation, gap, extras);
          }
          push("pc_plus", sum_scale * pc_forecast(pcp_beta, history, gap, extras));
        }
      }
    }
  }

  for (const auto& [model_id, path] : benchmarks.external_csv) {
    for (auto r : load_external_forecasts(path, model_id, s)) {
      const Eigen::Index row = panel.index_of(r.origin);
      const double realized = realized_value(pi.series, row, settings.target);
      r.has_realized = std::isfinite(realized);
      r.realized = r.has_realized ? realized : 0.0;
      result.records.push_back(r);
    }
  }

  result.summary = summarize_records(result.records, plan.exclusions);
  return result;
}

}  // namespace hnn
