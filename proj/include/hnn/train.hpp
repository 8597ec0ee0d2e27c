#pragma once

#include "hnn/model.hpp"
#include "hnn/stats.hpp"

#include <cstdint>

namespace hnn {

/// Estimation settings. Defaults follow the benchmark setup: full-batch Adam
/// at rate 0.005 for up to 500 epochs, 85/15 block-shuffled early stopping
/// with 6-quarter blocks, dropout 0.2.
struct TrainConfig {
  int max_epochs = 500;
  AdamParams adam;
  double train_fraction = 0.85;
  int shuffle_block_quarters = 6;
  double dropout = 0.2;
  int ensemble_size = 50;            // 50 for forecasting, 300 for inference-grade paths
  int bootstrap_block_quarters = 6;  // 1.5 years
  std::uint64_t seed = 0;
  int threads = 1;
  int max_retries_per_draw = 3;
  /// Divide out-of-bag sums by (1 - train_fraction) * B instead of per-date
  /// counts.
  bool fixed_oob_denominator = false;
  /// Halt a draw after this many epochs without a new holdout best (0 runs
  /// every epoch up to max_epochs; the returned snapshot is the argmin either
  /// way).
  int patience = 0;
  /// Train the volatility variant with its head pinned at one (the loss
  /// becomes MSE + 1).
  bool unit_volatility = false;

  void validate() const;
};

struct Allocation {
  std::vector<int> train_rows;
  std::vector<int> holdout_rows;
};

/// Randomly assigns contiguous blocks of `block_len` rows to the training set
/// until it covers ~train_frac of the sample; the rest is the holdout. The
/// two sets partition 0..T-1 and both are non-empty.
Allocation block_allocate(int T, int block_len, double train_frac, Rng& rng);

struct TrainResult {
  HnnModel model;
  int best_epoch = 0;
  // Holdout objective at the best epoch: MSE, or the penalized mean-variance
  // loss for the volatility variant.
  double best_holdout_mse = 0.0;
  std::vector<double> holdout_mse_path;  // entry e = holdout objective after e epochs
};

/// Full-batch Adam with early stopping: returns the weights snapshot at the
/// epoch (0 included) minimizing holdout MSE. Throws NumericalError on
/// divergence.
TrainResult train_one(const ArchitectureConfig& arch, const FeatureSet& features,
                      const Allocation& allocation, const TrainConfig& config,
                      std::uint64_t seed);

struct EnsembleMember {
  Allocation allocation;
  TrainResult fit;
  std::uint64_t seed = 0;
  int attempts = 1;
};

struct Ensemble {
  ArchitectureConfig arch;
  TrainConfig config;
  std::vector<EnsembleMember> members;
  Eigen::Index est_rows = 0;
};

/// Trains `config.ensemble_size` members over independent block allocations,
/// in parallel when config.threads > 1. Member seeds derive from the draw
/// index so results do not depend on scheduling order. Divergent draws are
/// redrawn up to config.max_retries_per_draw times.
Ensemble train_ensemble(const ArchitectureConfig& arch, const FeatureSet& features,
                        const TrainConfig& config);

/// Mean of member predictions over all feature rows.
Vector ensemble_prediction(const Ensemble& ensemble, const FeatureSet& features);

struct PathDraws {
  std::string name;
  Matrix draws;  // rows x B
};

/// Per-draw paths of every component (and, for factorized models, every
/// state, coefficient and volatility path) together with the out-of-bag mask.
/// Entry (t, b) of `oob` is true when draw b may be used at date t: holdout
/// rows inside the estimation sample, every draw beyond it.
struct ComponentPaths {
  std::vector<Quarter> dates;
  Eigen::Index est_rows = 0;
  bool factorized = false;
  bool has_volatility = false;
  BoolArray oob;
  PathDraws prediction;
  std::vector<PathDraws> components;
  std::vector<PathDraws> states;  // factorized
  std::vector<PathDraws> coefs;   // factorized, non-negative
  PathDraws volatility;           // volatility variant

  Eigen::Index rows() const { return static_cast<Eigen::Index>(dates.size()); }
  int component_index(const std::string& name) const;
  int state_index(const std::string& name) const;
};

/// Evaluates every trained member on all rows and masks in-bag values.
ComponentPaths oob_components(const Ensemble& ensemble, const FeatureSet& features);

/// Out-of-bag average per date. With `fixed_denominator` > 0 the sum is
/// divided by that constant instead of the per-date draw count. Dates with no
/// available draw yield NaN.
Vector oob_mean(const PathDraws& path, const BoolArray& oob, double fixed_denominator = 0.0);

Eigen::VectorXi oob_counts(const BoolArray& oob);

struct Band {
  Vector lower;
  Vector upper;
};

/// Per-date empirical quantile band at the given coverage level over the
/// draws available at each date. Throws when any date has fewer than 10
/// draws.
Band credible_band(const PathDraws& path, const BoolArray& oob, double level);

/// Rescales every state path draw to the target standard deviation over the
/// estimation sample and its paired coefficient path by the inverse factor.
/// Stored products and predictions are untouched.
void identify_factorization(ComponentPaths& paths, double target_std);

/// Shifts each state-product component to mean zero over the estimation
/// sample (per draw), absorbing the shifts into the trend component so the
/// prediction is unchanged.
void recenter_components(ComponentPaths& paths, const std::string& trend_component);

}  // namespace hnn
