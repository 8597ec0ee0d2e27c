#include "hnn/net.hpp"

#include <cmath>

namespace hnn {

Eigen::Index DenseNet::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

DenseNet make_dense_net(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                        Eigen::Index output, Activation hidden_activation,
                        Activation output_activation, double dropout_rate, Rng& rng) {
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
  DenseNet net;
  net.dropout_rate = dropout_rate;
  Eigen::Index fan_in = input;
  auto add_layer = [&](Eigen::Index fan_out, Activation act) {
    DenseLayer layer;
    layer.activation = act;
    layer.weights = Matrix(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < fan_in; ++i) {
      for (Eigen::Index j = 0; j < fan_out; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
    }
    // Small positive bias keeps units alive at inputs that are exactly zero
    // (the trend starts at 0), which the volatility head needs for h_v > 0.
    layer.bias = RowVector::Constant(fan_out, 0.01);
    net.layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (Eigen::Index width : hidden) add_layer(width, hidden_activation);
  add_layer(output, output_activation);
  return net;
}

namespace {

void apply_activation(Matrix& x, Activation act) {
  switch (act) {
    case Activation::Linear:
      return;
    case Activation::Relu:
      x = x.cwiseMax(0.0);
      return;
    case Activation::Abs:
      x = x.cwiseAbs();
      return;
  }
}

Matrix activation_grad(const Matrix& pre, const Matrix& upstream, Activation act) {
  switch (act) {
    case Activation::Linear:
      return upstream;
    case Activation::Relu:
      return (pre.array() > 0.0).select(upstream, 0.0);
    case Activation::Abs:
      return upstream.array() * pre.array().sign();
  }
  return upstream;
}

}  // namespace

Matrix forward(const DenseNet& net, const Matrix& X, Mode mode, Rng* rng, ForwardCache* cache) {
  if (X.cols() != net.input_width()) {
    throw NumericalError("input width " + std::to_string(X.cols()) + " does not match net input " +
                         std::to_string(net.input_width()));
  }
  const bool dropping = mode == Mode::Train && net.dropout_rate > 0.0;
  if (dropping && rng == nullptr) throw NumericalError("train-mode dropout needs an rng");
  if (cache) {
    cache->input = X;
    cache->pre.clear();
    cache->post.clear();
    cache->keep_mask.clear();
  }
  Matrix a = X;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    Matrix pre = (a * layer.weights).rowwise() + layer.bias;
    Matrix post = pre;
    apply_activation(post, layer.activation);
    const bool hidden = l + 1 < net.layers.size();
    Matrix mask;
    if (dropping && hidden) {
      mask = Matrix(post.rows(), post.cols());
      const double keep_scale = 1.0 / (1.0 - net.dropout_rate);
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) {
          mask(i, j) = rng->uniform() < net.dropout_rate ? 0.0 : keep_scale;
        }
      }
      post.array() *= mask.array();
    }
    if (cache) {
      cache->pre.push_back(pre);
      cache->post.push_back(post);
      cache->keep_mask.push_back(std::move(mask));
    }
    a = std::move(post);
  }
  return a;
}

void NetGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : bias) b.setZero();
}

void NetGrads::accumulate(const NetGrads& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    bias[l] += other.bias[l];
  }
}

NetGrads make_grads(const DenseNet& net) {
  NetGrads g;
  for (const auto& layer : net.layers) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.bias.push_back(RowVector::Zero(layer.bias.cols()));
  }
  return g;
}

Matrix backward(const DenseNet& net, const ForwardCache& cache, const Matrix& output_grad,
                NetGrads& grads) {
  Matrix upstream = output_grad;
  for (size_t l = net.layers.size(); l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    if (cache.keep_mask[l].size() > 0) upstream.array() *= cache.keep_mask[l].array();
    const Matrix dpre = activation_grad(cache.pre[l], upstream, layer.activation);
    const Matrix& below = l == 0 ? cache.input : cache.post[l - 1];
    grads.weights[l].noalias() += below.transpose() * dpre;
    grads.bias[l] += dpre.colwise().sum();
    upstream.noalias() = dpre * layer.weights.transpose();
  }
  return upstream;
}

}  // namespace hnn
