#pragma once

#include "hnn/train.hpp"

#include <map>

namespace hnn {

struct ForecastRecord {
  Quarter origin;
  std::string model;
  int horizon = 1;
  double forecast = 0.0;
  double realized = 0.0;
  bool has_realized = false;
  double predicted_vol = 0.0;
  bool has_vol = false;
};

/// Pseudo-out-of-sample design. Networks are re-estimated every `nn_cadence`
/// origins, closed-form benchmarks every `bench_cadence`.
struct OosPlan {
  Quarter first_origin{2008, 1};
  Quarter last_origin{2021, 3};
  Quarter estimation_start{1961, 3};
  int nn_cadence = 4;
  int bench_cadence = 1;
  std::vector<Quarter> exclusions;

  void validate() const;
};

struct RmseResult {
  double value = 0.0;
  double ratio_to_ar4 = 0.0;  // NaN when no AR(4) records cover the same origins
  int n = 0;
};

/// Root mean squared error of one model over realized, non-excluded origins,
/// plus its ratio to the AR(4) benchmark on the same origin set.
RmseResult rmse(const std::vector<ForecastRecord>& records, const std::string& model,
                const std::vector<Quarter>& exclusions);

/// Least squares AR(p) fit: returns [intercept, phi_1..phi_p].
Vector fit_ar(const Vector& history, int lags);

/// Iterated AR forecast from given coefficients; multi-horizon values are
/// averaged when the target is a horizon mean.
double ar_forecast(const Vector& beta, const Vector& history, int s,
                   TargetAggregation aggregation);

/// Expanding-window AR(4) forecast.
double bench_ar4(const Vector& history, int s,
                 TargetAggregation aggregation = TargetAggregation::OneStep);

/// Mean of the last `window` observations.
double bench_rolling_mean(const Vector& history, int window);

/// Rolling-window least squares fit of the s-ahead target on two lags of the
/// series, the supplied gap, and two lags of each extra regressor.
Vector fit_pc(const Vector& history, int s, TargetAggregation aggregation, const Vector& gap,
              const std::vector<Vector>& extras, int window = 60);

/// Forecast at the last row of the sample from given coefficients.
double pc_forecast(const Vector& beta, const Vector& history, const Vector& gap,
                   const std::vector<Vector>& extras);

double bench_pc(const Vector& history, int s, TargetAggregation aggregation, const Vector& gap,
                const std::vector<Vector>& extras, int window = 60);

struct BenchmarkSet {
  bool ar4 = true;
  bool mean_1y = true;   // window 4
  bool mean_10y = true;  // window 40
  bool pc = false;       // needs gap_mnemonic
  bool pc_plus = false;  // needs gap + extras
  std::string gap_mnemonic;                       // user-supplied gap column, used as-is
  std::vector<std::string> extra_mnemonics;       // oil, survey expectations, ...
  std::map<std::string, std::string> external_csv;  // model id -> file of (origin, value)
};

struct OosSettings {
  std::vector<HemisphereSpec> hemispheres;
  TargetSpec target;
  ArchitectureConfig arch;
  TrainConfig train;
  BuildOptions build;
  bool run_network = true;
};

struct RmseSummaryRow {
  std::string model;
  int n_included = 0;
  int n_excluded = 0;
  double rmse_all = 0.0;
  double ratio_all = 0.0;
  double rmse_excl = 0.0;
  double ratio_excl = 0.0;
};

struct OosResult {
  std::vector<ForecastRecord> records;
  std::vector<RmseSummaryRow> summary;
};

/// Walks origins from plan.first_origin to plan.last_origin, training /
/// fitting on data through each origin only, and scores everything including
/// and excluding the exclusion windows. Forecast inputs are audited against
/// the origin date.
OosResult run_oos(const RawPanel& panel, const OosSettings& settings, const OosPlan& plan,
                  const BenchmarkSet& benchmarks);

std::vector<RmseSummaryRow> summarize_records(const std::vector<ForecastRecord>& records,
                                              const std::vector<Quarter>& exclusions);

/// External forecast import: CSV rows of (origin, value).
std::vector<ForecastRecord> load_external_forecasts(const std::string& path,
                                                    const std::string& model_id, int horizon);

}  // namespace hnn
