#pragma once

#include "hnn/adam.hpp"
#include "hnn/features.hpp"
#include "hnn/net.hpp"

namespace hnn {

enum class Variant { Additive, Factorized, FactorizedVolatility };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant variant);

struct ArchitectureConfig {
  Variant variant = Variant::Factorized;
  // additive variant: deep trunk, optionally shared across hemispheres
  int shared_layers = 5;
  Eigen::Index shared_width = 400;
  bool share_trunk = true;
  // factorized variant
  int state_layers = 3;
  Eigen::Index state_width = 400;
  int coef_layers = 3;
  Eigen::Index coef_width = 100;
  int vol_layers = 3;
  Eigen::Index vol_width = 100;
  double dropout = 0.2;
};

/// Trained (or initialized) weights for all sub-networks of one model.
///
/// Additive: `nets` holds one component net per hemisphere, each taking the
/// hemisphere's feature block (plus the trend when requested). When
/// `arch.share_trunk` is set the hidden layers past the first are tied across
/// nets; the trainer keeps them identical.
///
/// Factorized: `nets` holds the state nets (one per state hemisphere, inputs
/// exclude the trend), `coef_nets` the matching trend-only coefficient nets
/// with an absolute-value output layer, and `trend_net` the unfactorized
/// trend component when the spec lists a coefficient-role hemisphere.
struct HnnModel {
  ArchitectureConfig arch;
  std::vector<std::string> hemisphere_names;  // all hemispheres, feature-set order
  std::vector<int> state_indices;             // positions with State role
  int trend_component_index = -1;             // position of the Coefficient-role hemisphere
  int volatility_index = -1;                  // position of the Volatility-role hemisphere
  std::vector<int> component_indices;         // hemispheres that yield an additive component
  std::vector<int> state_component_cols;      // component column per state hemisphere
  int trend_component_col = -1;               // component column of the trend component

  std::vector<DenseNet> nets;       // additive components / factorized state nets
  std::vector<DenseNet> coef_nets;  // factorized only, aligned with state_indices
  DenseNet trend_net;               // factorized trend component (if any)
  DenseNet vol_net;                 // factorized+volatility only

  // Frozen normalization statistics for the volatility head (training means).
  Vector vol_coef_means;    // one per state hemisphere
  double vol_exp_mean = 1;  // mean of exp(raw volatility output)

  int n_states() const { return static_cast<int>(state_indices.size()); }
  bool has_trend_component() const { return trend_component_index >= 0; }
};

HnnModel make_model(const ArchitectureConfig& arch, const FeatureSet& features, Rng& rng);

/// Row-subset view of the design matrices, arranged per sub-network.
struct ModelInputs {
  std::vector<Matrix> nets;  // additive: per hemisphere; factorized: per state hemisphere
  Matrix trend;              // rows x 1
  Matrix vol;                // rows x p_v (factorized+volatility)
  Eigen::Index rows = 0;
};

ModelInputs assemble_inputs(const HnnModel& model, const FeatureSet& features);
ModelInputs assemble_inputs(const HnnModel& model, const FeatureSet& features,
                            const std::vector<int>& row_subset);

/// Per-time outputs of every hemisphere. `components` carries each
/// hemisphere's additive contribution (the coefficient-state product for
/// factorized models); the prediction equals their row sum plus nothing else.
struct ComponentOutput {
  Vector prediction;
  std::vector<std::string> component_names;
  Matrix components;  // rows x n_hemispheres
  // factorized decomposition, aligned with state order
  Matrix states;
  Matrix coefs;
  // volatility head
  Vector volatility;  // h_v, strictly positive
  Vector vol_slow;    // trend-driven factor, mean 1 on the normalization sample
  Vector vol_fast;    // exp(state-driven factor), mean 1 on the normalization sample
};

ComponentOutput model_forward(const HnnModel& model, const ModelInputs& inputs, Mode mode,
                              Rng* rng = nullptr);

ComponentOutput predict(const HnnModel& model, const FeatureSet& features);
ComponentOutput predict_additive(const HnnModel& model, const FeatureSet& features);
ComponentOutput predict_factorized(const HnnModel& model, const FeatureSet& features);

/// Recomputes and stores the volatility normalization means from the given
/// rows (no dropout). Call after training so eval-mode volatility uses
/// statistics frozen on the training sample.
void freeze_volatility_stats(HnnModel& model, const ModelInputs& training_inputs);

double loss_mse(const Vector& y, const Vector& y_hat);

/// Joint mean-variance objective: (1/T) sum ((e_t / h_t)^2 + 1) * h_t.
double loss_mean_variance(const Vector& y, const Vector& y_hat, const Vector& h_v);

struct ModelGrads {
  std::vector<NetGrads> nets;
  std::vector<NetGrads> coef_nets;
  NetGrads trend_net;
  NetGrads vol_net;
};

ModelGrads make_model_grads(const HnnModel& model);

struct LossOptions {
  /// Replace the volatility head by h_v = 1 (turns the mean-variance loss
  /// into MSE + 1); only meaningful for the volatility variant.
  bool unit_volatility = false;
};

/// Training loss on a batch with reverse-mode gradients for every
/// sub-network, including the paths through the factorized products, the
/// volatility head and its in-batch mean normalizations.
double model_loss(const HnnModel& model, const ModelInputs& inputs, const Vector& target,
                  Mode mode, Rng* rng, ModelGrads* grads, const LossOptions& options = {});

}  // namespace hnn
