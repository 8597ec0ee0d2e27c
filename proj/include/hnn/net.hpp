#pragma once

#include "hnn/rng.hpp"
#include "hnn/types.hpp"

namespace hnn {

enum class Activation { Linear, Relu, Abs };

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // 1 x fan_out
  Activation activation = Activation::Relu;
};

/// Plain fully connected net. Dropout is inverted (train-time scaling by
/// 1/(1-rate)) and applies to hidden activations only, so eval mode needs no
/// rescaling.
struct DenseNet {
  std::vector<DenseLayer> layers;
  double dropout_rate = 0.0;

  Eigen::Index input_width() const { return layers.front().weights.rows(); }
  Eigen::Index output_width() const { return layers.back().weights.cols(); }
  Eigen::Index parameter_count() const;
};

/// He-uniform initialization, seeded.
DenseNet make_dense_net(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                        Eigen::Index output, Activation hidden_activation,
                        Activation output_activation, double dropout_rate, Rng& rng);

enum class Mode { Train, Eval };

/// Intermediate quantities kept for the backward pass.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;        // pre-activation per layer
  std::vector<Matrix> post;       // post-activation (after dropout) per layer
  std::vector<Matrix> keep_mask;  // dropout keep masks (empty in eval / for output layer)
};

/// Runs the net on a batch (rows = observations). Train mode draws dropout
/// masks from `rng`; eval mode is deterministic and never touches it.
Matrix forward(const DenseNet& net, const Matrix& X, Mode mode, Rng* rng = nullptr,
               ForwardCache* cache = nullptr);

struct NetGrads {
  std::vector<Matrix> weights;
  std::vector<RowVector> bias;

  void set_zero();
  void accumulate(const NetGrads& other);
};

NetGrads make_grads(const DenseNet& net);

/// Reverse-mode gradients of the cached forward pass. `output_grad` is
/// dLoss/dOutput (same shape as the forward output); the return value is
/// dLoss/dInput. Gradients accumulate into `grads`.
Matrix backward(const DenseNet& net, const ForwardCache& cache, const Matrix& output_grad,
                NetGrads& grads);

}  // namespace hnn
