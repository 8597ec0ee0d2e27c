#pragma once

#include "hnn/net.hpp"

#include <cmath>

namespace hnn {

struct AdamParams {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring one net's parameters.
struct AdamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<RowVector> m_bias, v_bias;
  long step = 0;
  AdamParams params;
};

AdamState make_adam_state(const DenseNet& net, const AdamParams& params = {});

/// Bias-corrected Adam update of a single parameter block.
template <typename Block>
void adam_update(Block& param, const Block& grad, Block& m, Block& v, long step,
                 const AdamParams& p) {
  m.array() = p.beta1 * m.array() + (1.0 - p.beta1) * grad.array();
  v.array() = p.beta2 * v.array() + (1.0 - p.beta2) * grad.array().square();
  const double m_corr = 1.0 - std::pow(p.beta1, static_cast<double>(step));
  const double v_corr = 1.0 - std::pow(p.beta2, static_cast<double>(step));
  param.array() -=
      p.learning_rate * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + p.epsilon);
}

/// One optimizer step over all of a net's parameters.
void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state);

/// One optimizer step restricted to the given layer indices (used for nets
/// whose remaining layers are tied to another net).
void adam_step_layers(DenseNet& net, const NetGrads& grads, AdamState& state,
                      const std::vector<size_t>& layer_ids);

}  // namespace hnn
