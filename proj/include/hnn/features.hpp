#pragma once

#include "hnn/panel.hpp"
#include "hnn/transforms.hpp"

#include <map>
#include <optional>

namespace hnn {

enum class HemisphereRole { State, Coefficient, Volatility };

/// A named group of predictors feeding one sub-network. Coefficient-role
/// hemispheres carry only the time trend; volatility-role hemispheres define
/// the inputs of the conditional-volatility net (empty list means "all state
/// hemisphere features").
struct HemisphereSpec {
  std::string name;
  std::vector<std::string> mnemonics;
  bool include_trend = true;
  HemisphereRole role = HemisphereRole::State;
};

enum class TargetAggregation { OneStep, MeanOverHorizon };

struct TargetSpec {
  std::string mnemonic;
  int horizon = 1;
  TargetAggregation aggregation = TargetAggregation::OneStep;
  bool horizon_sum = false;  // literal sum of future rates instead of their mean
  std::optional<int> tcode_override;
  /// Unit multiplier applied after the transform, e.g. 400 turns a quarterly
  /// log difference into an annualized percentage rate.
  double scale = 1.0;

  void validate() const;
};

/// Per-hemisphere design matrix. `values` holds the standardized lag /
/// moving-average block; the trend input lives once in FeatureSet and is
/// appended by the model layer when a spec asks for it. Standardization
/// statistics are computed on the estimation range only and frozen for any
/// later row.
struct FeatureMatrix {
  HemisphereSpec spec;
  Matrix values;                              // rows x features
  std::vector<std::string> feature_names;     // "MNEMONIC.lag0" ...
  std::vector<std::string> feature_variable;  // owning mnemonic per column
  Vector scale_mean;                          // training-range mean per column
  Vector scale_std;                           // training-range std per column
  double card = 0;                            // feature count behind the sqrt-card divisor

  Eigen::Index cols() const { return values.cols(); }
  /// Columns belonging to one variable (its whole lag/MA group).
  std::vector<int> variable_columns(const std::string& mnemonic) const;
  std::vector<std::string> variables() const;
};

/// Aligned per-hemisphere design matrices plus target and trend. Rows cover
/// every date where all features are defined; the first `est_rows` rows form
/// the estimation sample (date <= train_end and target observed), later rows
/// are out-of-sample projections using frozen scalers.
struct FeatureSet {
  std::vector<Quarter> dates;
  std::vector<FeatureMatrix> hemispheres;
  Vector trend;    // linear index, 0..1 over the estimation sample, extrapolated beyond
  Vector target;   // NaN where the future value is not observed
  Eigen::Index est_rows = 0;
  Quarter train_end;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(dates.size()); }
  int hemisphere_index(const std::string& name) const;
  const FeatureMatrix& hemisphere(const std::string& name) const;
};

struct BuildOptions {
  int lag_base = 0;  // 0 -> lags 0..3 (current value included), 1 -> lags 1..4
  std::optional<Quarter> sample_start;
  bool allow_overlap = false;
  std::map<std::string, int> tcode_overrides;
};

/// Reserved mnemonic: the supervisor's own transformed series as a predictor.
inline constexpr const char* kTargetMnemonic = "Y";

/// Assembles per-hemisphere design matrices and the (possibly horizon
/// aggregated) target, standardized on the training range with the
/// sqrt-cardinality divisor.
FeatureSet build_features(const RawPanel& panel, const std::vector<HemisphereSpec>& specs,
                          const TargetSpec& target, Quarter train_end,
                          const BuildOptions& options = {});

/// Transformed target series aligned to panel rows (NaN where undefined).
Vector target_series(const RawPanel& panel, const TargetSpec& target);

/// One mnemonic's stationarity-transformed series aligned to panel rows (NaN
/// where undefined).
Vector transformed_series(const RawPanel& panel, const std::string& mnemonic,
                          std::optional<int> tcode_override = std::nullopt);

}  // namespace hnn
