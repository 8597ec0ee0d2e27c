#pragma once

#include "hnn/train.hpp"

namespace hnn {

struct VIOptions {
  int reps = 30;
  /// Shuffle all of a variable's lag/MA columns with one shared permutation
  /// (preserves the variable-group semantics); false draws an independent
  /// permutation per column.
  bool joint_shuffle = true;
  /// Evaluate on each draw's out-of-bag rows only; false uses the whole
  /// estimation sample.
  bool oob_only = true;
};

/// Permutation importance of one variable group for one hemisphere's
/// component: the squared displacement of the recomputed component under
/// shuffling, as a percentage of the component's variance, averaged over
/// draws and repetitions. No retraining happens. An input the component never
/// uses scores 0.
double variable_importance(const Ensemble& ensemble, const FeatureSet& features,
                           const std::string& hemisphere, const std::string& variable,
                           const VIOptions& options, Rng& rng);

struct VIEntry {
  std::string variable;
  double vi = 0.0;
};

struct VIReport {
  std::string hemisphere;
  std::vector<VIEntry> ranking;  // descending
  int reps = 0;
};

VIReport variable_importance_report(const Ensemble& ensemble, const FeatureSet& features,
                                    const std::string& hemisphere, const VIOptions& options,
                                    Rng& rng);

/// share_j(t) = |h_{t,j}| / sum_k |h_{t,k}|; throws when all components are
/// zero at some date.
Matrix contribution_shares(const Matrix& components);

struct PcaResult {
  Vector scores;
  Vector loadings;
  double explained_variance = 0.0;
};

/// First principal component of the (already standardized) feature block.
/// Optional column weights are normalized to mean one, so uniform weights
/// reproduce the plain extraction. The sign is fixed against
/// `sign_reference` when given (non-negative correlation), otherwise by the
/// largest-magnitude loading.
PcaResult pca_extract(const Matrix& features, const Vector& weights = Vector(),
                      const Vector& sign_reference = Vector());

}  // namespace hnn
