#include "hnn/adam.hpp"

namespace hnn {

AdamState make_adam_state(const DenseNet& net, const AdamParams& params) {
  AdamState state;
  state.params = params;
  for (const auto& layer : net.layers) {
    state.m_weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    state.v_weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    state.m_bias.push_back(RowVector::Zero(layer.bias.cols()));
    state.v_bias.push_back(RowVector::Zero(layer.bias.cols()));
  }
  return state;
}

namespace {

void update_layer(DenseNet& net, const NetGrads& grads, AdamState& state, size_t l) {
  adam_update(net.layers[l].weights, grads.weights[l], state.m_weights[l], state.v_weights[l],
              state.step, state.params);
  adam_update(net.layers[l].bias, grads.bias[l], state.m_bias[l], state.v_bias[l], state.step,
              state.params);
}

}  // namespace

void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state) {
  ++state.step;
  for (size_t l = 0; l < net.layers.size(); ++l) update_layer(net, grads, state, l);
}

void adam_step_layers(DenseNet& net, const NetGrads& grads, AdamState& state,
                      const std::vector<size_t>& layer_ids) {
  ++state.step;
  for (size_t l : layer_ids) update_layer(net, grads, state, l);
}

}  // namespace hnn
