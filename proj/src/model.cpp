#include "hnn/model.hpp"

#include <cmath>

namespace hnn {

Variant variant_from_string(const std::string& name) {
  if (name == "additive") return Variant::Additive;
  if (name == "factorized") return Variant::Factorized;
  if (name == "volatility" || name == "factorized+volatility") return Variant::FactorizedVolatility;
  throw ConfigError("unknown variant: '" + name + "'");
}

std::string variant_to_string(Variant variant) {
  switch (variant) {
    case Variant::Additive: return "additive";
    case Variant::Factorized: return "factorized";
    case Variant::FactorizedVolatility: return "volatility";
  }
  return "?";
}

namespace {

DenseLayer init_layer(Eigen::Index fan_in, Eigen::Index fan_out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.activation = act;
  layer.weights = Matrix(fan_in, fan_out);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < fan_in; ++i) {
    for (Eigen::Index j = 0; j < fan_out; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
  }
  layer.bias = RowVector::Constant(fan_out, 0.01);  // keep units alive at zero inputs
  return layer;
}

std::vector<Eigen::Index> widths(Eigen::Index width, int layers) {
  return std::vector<Eigen::Index>(static_cast<size_t>(layers), width);
}

bool factorized(Variant v) { return v != Variant::Additive; }

}  // namespace

HnnModel make_model(const ArchitectureConfig& arch, const FeatureSet& features, Rng& rng) {
  HnnModel model;
  model.arch = arch;

  for (size_t i = 0; i < features.hemispheres.size(); ++i) {
    const HemisphereSpec& spec = features.hemispheres[i].spec;
    model.hemisphere_names.push_back(spec.name);
    switch (spec.role) {
      case HemisphereRole::State:
        model.state_component_cols.push_back(static_cast<int>(model.component_indices.size()));
        model.state_indices.push_back(static_cast<int>(i));
        model.component_indices.push_back(static_cast<int>(i));
        break;
      case HemisphereRole::Coefficient:
        if (model.trend_component_index >= 0) {
          throw ConfigError("at most one coefficient-role hemisphere is supported");
        }
        model.trend_component_index = static_cast<int>(i);
        model.trend_component_col = static_cast<int>(model.component_indices.size());
        model.component_indices.push_back(static_cast<int>(i));
        break;
      case HemisphereRole::Volatility:
        if (model.volatility_index >= 0) {
          throw ConfigError("at most one volatility-role hemisphere is supported");
        }
        model.volatility_index = static_cast<int>(i);
        break;
    }
  }
  if (model.state_indices.empty()) throw ConfigError("model needs at least one state hemisphere");

  if (!factorized(arch.variant)) {
    // One component net per hemisphere; hidden trunk optionally tied.
    std::vector<DenseLayer> trunk;
    for (int l = 1; l < arch.shared_layers; ++l) {
      trunk.push_back(init_layer(arch.shared_width, arch.shared_width, Activation::Relu, rng));
    }
    for (size_t i = 0; i < features.hemispheres.size(); ++i) {
      const FeatureMatrix& fm = features.hemispheres[i];
      if (fm.spec.role == HemisphereRole::Volatility) continue;
      Eigen::Index in = fm.spec.role == HemisphereRole::Coefficient
                            ? 1
                            : fm.cols() + (fm.spec.include_trend ? 1 : 0);
      DenseNet net;
      net.dropout_rate = arch.dropout;
      net.layers.push_back(init_layer(in, arch.shared_width, Activation::Relu, rng));
      if (arch.share_trunk) {
        for (const auto& layer : trunk) net.layers.push_back(layer);
      } else {
        for (int l = 1; l < arch.shared_layers; ++l) {
          net.layers.push_back(init_layer(arch.shared_width, arch.shared_width, Activation::Relu, rng));
        }
      }
      net.layers.push_back(init_layer(arch.shared_width, 1, Activation::Linear, rng));
      model.nets.push_back(std::move(net));
    }
    return model;
  }

  for (int idx : model.state_indices) {
    const FeatureMatrix& fm = features.hemispheres[static_cast<size_t>(idx)];
    Rng net_rng(rng.next_u64());
    model.nets.push_back(make_dense_net(fm.cols(), widths(arch.state_width, arch.state_layers), 1,
                                        Activation::Relu, Activation::Linear, arch.dropout, net_rng));
    Rng coef_rng(rng.next_u64());
    model.coef_nets.push_back(make_dense_net(1, widths(arch.coef_width, arch.coef_layers), 1,
                                             Activation::Relu, Activation::Abs, arch.dropout,
                                             coef_rng));
  }
  if (model.has_trend_component()) {
    Rng trend_rng(rng.next_u64());
    model.trend_net = make_dense_net(1, widths(arch.coef_width, arch.coef_layers), 1,
                                     Activation::Relu, Activation::Linear, arch.dropout, trend_rng);
  }
  if (arch.variant == Variant::FactorizedVolatility) {
    Eigen::Index vol_in = 0;
    if (model.volatility_index >= 0) {
      vol_in = features.hemispheres[static_cast<size_t>(model.volatility_index)].cols();
    } else {
      for (int idx : model.state_indices) {
        vol_in += features.hemispheres[static_cast<size_t>(idx)].cols();
      }
    }
    Rng vol_rng(rng.next_u64());
    model.vol_net = make_dense_net(vol_in, widths(arch.vol_width, arch.vol_layers), 1,
                                   Activation::Relu, Activation::Linear, arch.dropout, vol_rng);
    model.vol_coef_means = Vector::Ones(model.n_states());
    model.vol_exp_mean = 1.0;
  }
  return model;
}

namespace {

Matrix gather_rows(const Matrix& source, const std::vector<int>* rows) {
  if (rows == nullptr) return source;
  Matrix out(static_cast<Eigen::Index>(rows->size()), source.cols());
  for (size_t r = 0; r < rows->size(); ++r) out.row(static_cast<Eigen::Index>(r)) = source.row((*rows)[r]);
  return out;
}

ModelInputs assemble(const HnnModel& model, const FeatureSet& features,
                     const std::vector<int>* rows) {
  ModelInputs inputs;
  const Eigen::Index all_rows = features.rows();
  Matrix trend_col = Matrix(all_rows, 1);
  trend_col.col(0) = features.trend;
  inputs.trend = gather_rows(trend_col, rows);
  inputs.rows = inputs.trend.rows();

  if (!factorized(model.arch.variant)) {
    for (size_t i = 0; i < features.hemispheres.size(); ++i) {
      const FeatureMatrix& fm = features.hemispheres[i];
      if (fm.spec.role == HemisphereRole::Volatility) continue;
      if (fm.spec.role == HemisphereRole::Coefficient) {
        inputs.nets.push_back(inputs.trend);
        continue;
      }
      Matrix block(all_rows, fm.cols() + (fm.spec.include_trend ? 1 : 0));
      block.leftCols(fm.cols()) = fm.values;
      if (fm.spec.include_trend) block.col(fm.cols()) = features.trend;
      inputs.nets.push_back(gather_rows(block, rows));
    }
    return inputs;
  }

  for (int idx : model.state_indices) {
    inputs.nets.push_back(gather_rows(features.hemispheres[static_cast<size_t>(idx)].values, rows));
  }
  if (model.arch.variant == Variant::FactorizedVolatility) {
    if (model.volatility_index >= 0) {
      inputs.vol = gather_rows(features.hemispheres[static_cast<size_t>(model.volatility_index)].values, rows);
    } else {
      Eigen::Index total = 0;
      for (const auto& block : inputs.nets) total += block.cols();
      inputs.vol = Matrix(inputs.rows, total);
      Eigen::Index at = 0;
      for (const auto& block : inputs.nets) {
        inputs.vol.middleCols(at, block.cols()) = block;
        at += block.cols();
      }
    }
  }
  return inputs;
}

}  // namespace

ModelInputs assemble_inputs(const HnnModel& model, const FeatureSet& features) {
  return assemble(model, features, nullptr);
}

ModelInputs assemble_inputs(const HnnModel& model, const FeatureSet& features,
                            const std::vector<int>& row_subset) {
  return assemble(model, features, &row_subset);
}

namespace {

/// Everything the backward pass needs from one forward evaluation.
struct Workspace {
  std::vector<ForwardCache> net_caches;
  std::vector<ForwardCache> coef_caches;
  ForwardCache trend_cache;
  ForwardCache vol_cache;
  Matrix net_out;   // rows x n_nets
  Matrix coef_out;  // rows x n_states
  Vector trend_out;
  Vector v2_raw, vol_exp, vol_fast, vol_slow, h_v;
  Vector coef_means;
  double exp_mean = 1.0;
};

void run_forward(const HnnModel& model, const ModelInputs& inputs, Mode mode, Rng* rng,
                 bool with_caches, const LossOptions& options, Workspace& ws) {
  const Eigen::Index rows = inputs.rows;
  const bool is_factorized = factorized(model.arch.variant);
  const size_t n_nets = model.nets.size();

  ws.net_caches.resize(with_caches ? n_nets : 0);
  ws.net_out = Matrix(rows, static_cast<Eigen::Index>(n_nets));
  for (size_t i = 0; i < n_nets; ++i) {
    ws.net_out.col(static_cast<Eigen::Index>(i)) =
        forward(model.nets[i], inputs.nets[i], mode, rng, with_caches ? &ws.net_caches[i] : nullptr);
  }

  if (!is_factorized) return;

  const int n_states = model.n_states();
  ws.coef_caches.resize(with_caches ? static_cast<size_t>(n_states) : 0);
  ws.coef_out = Matrix(rows, n_states);
  for (int j = 0; j < n_states; ++j) {
    ws.coef_out.col(j) = forward(model.coef_nets[static_cast<size_t>(j)], inputs.trend, mode, rng,
                                 with_caches ? &ws.coef_caches[static_cast<size_t>(j)] : nullptr);
  }
  if (model.has_trend_component()) {
    ws.trend_out =
        forward(model.trend_net, inputs.trend, mode, rng, with_caches ? &ws.trend_cache : nullptr);
  }

  if (model.arch.variant != Variant::FactorizedVolatility || options.unit_volatility) return;

  ws.v2_raw = forward(model.vol_net, inputs.vol, mode, rng, with_caches ? &ws.vol_cache : nullptr);
  ws.vol_exp = ws.v2_raw.array().exp();
  ws.exp_mean = mode == Mode::Train ? ws.vol_exp.mean() : model.vol_exp_mean;
  if (!(ws.exp_mean > 0.0) || !std::isfinite(ws.exp_mean)) {
    throw NumericalError("volatility normalization degenerate (exp mean)");
  }
  ws.vol_fast = ws.vol_exp / ws.exp_mean;

  ws.coef_means = Vector(n_states);
  ws.vol_slow = Vector::Zero(rows);
  for (int j = 0; j < n_states; ++j) {
    const double m = mode == Mode::Train ? ws.coef_out.col(j).mean() : model.vol_coef_means[j];
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw NumericalError("volatility normalization degenerate (coefficient path mean)");
    }
    ws.coef_means[j] = m;
    ws.vol_slow += ws.coef_out.col(j) / m;
  }
  ws.vol_slow /= static_cast<double>(n_states);
  ws.h_v = ws.vol_slow.array() * ws.vol_fast.array();
}

ComponentOutput collect_output(const HnnModel& model, const Workspace& ws, Eigen::Index rows) {
  ComponentOutput out;
  const bool is_factorized = factorized(model.arch.variant);
  const Eigen::Index n_components = static_cast<Eigen::Index>(model.component_indices.size());
  out.components = Matrix::Zero(rows, n_components);
  for (int idx : model.component_indices) {
    out.component_names.push_back(model.hemisphere_names[static_cast<size_t>(idx)]);
  }

  if (!is_factorized) {
    for (Eigen::Index c = 0; c < n_components; ++c) out.components.col(c) = ws.net_out.col(c);
    out.prediction = out.components.rowwise().sum();
    return out;
  }

  out.states = ws.net_out;
  out.coefs = ws.coef_out;
  for (int j = 0; j < model.n_states(); ++j) {
    out.components.col(model.state_component_cols[static_cast<size_t>(j)]) =
        ws.net_out.col(j).array() * ws.coef_out.col(j).array();
  }
  if (model.has_trend_component()) out.components.col(model.trend_component_col) = ws.trend_out;
  out.prediction = out.components.rowwise().sum();
  if (ws.h_v.size() > 0) {
    out.volatility = ws.h_v;
    out.vol_slow = ws.vol_slow;
    out.vol_fast = ws.vol_fast;
  }
  return out;
}

}  // namespace

ComponentOutput model_forward(const HnnModel& model, const ModelInputs& inputs, Mode mode,
                              Rng* rng) {
  Workspace ws;
  run_forward(model, inputs, mode, rng, false, {}, ws);
  return collect_output(model, ws, inputs.rows);
}

ComponentOutput predict(const HnnModel& model, const FeatureSet& features) {
  return model_forward(model, assemble_inputs(model, features), Mode::Eval);
}

ComponentOutput predict_additive(const HnnModel& model, const FeatureSet& features) {
  if (factorized(model.arch.variant)) throw ConfigError("model is not additive");
  return predict(model, features);
}

ComponentOutput predict_factorized(const HnnModel& model, const FeatureSet& features) {
  if (!factorized(model.arch.variant)) throw ConfigError("model is not factorized");
  return predict(model, features);
}

void freeze_volatility_stats(HnnModel& model, const ModelInputs& training_inputs) {
  if (model.arch.variant != Variant::FactorizedVolatility) return;
  Workspace ws;
  // Train-mode statistics without dropout: evaluate activations in eval mode
  // but recompute the batch means, then store them.
  run_forward(model, training_inputs, Mode::Eval, nullptr, false, {}, ws);
  model.vol_exp_mean = ws.vol_exp.mean();
  for (int j = 0; j < model.n_states(); ++j) model.vol_coef_means[j] = ws.coef_out.col(j).mean();
  if (!(model.vol_exp_mean > 0.0)) throw NumericalError("degenerate volatility statistics");
  for (int j = 0; j < model.n_states(); ++j) {
    if (!(model.vol_coef_means[j] > 0.0)) throw NumericalError("degenerate coefficient-path mean");
  }
}

double loss_mse(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) throw NumericalError("loss size mismatch");
  return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

double loss_mean_variance(const Vector& y, const Vector& y_hat, const Vector& h_v) {
  if (y.size() != y_hat.size() || y.size() != h_v.size()) throw NumericalError("loss size mismatch");
  if ((h_v.array() <= 0.0).any()) throw NumericalError("volatility path must be strictly positive");
  const auto e = (y - y_hat).array();
  return ((e / h_v.array()).square() + 1.0).cwiseProduct(h_v.array()).mean();
}

ModelGrads make_model_grads(const HnnModel& model) {
  ModelGrads grads;
  for (const auto& net : model.nets) grads.nets.push_back(make_grads(net));
  for (const auto& net : model.coef_nets) grads.coef_nets.push_back(make_grads(net));
  if (model.has_trend_component()) grads.trend_net = make_grads(model.trend_net);
  if (model.arch.variant == Variant::FactorizedVolatility) grads.vol_net = make_grads(model.vol_net);
  return grads;
}

double model_loss(const HnnModel& model, const ModelInputs& inputs, const Vector& target,
                  Mode mode, Rng* rng, ModelGrads* grads, const LossOptions& options) {
  const Eigen::Index rows = inputs.rows;
  if (target.size() != rows) throw NumericalError("target length mismatch");
  const double n = static_cast<double>(rows);
  const bool is_factorized = factorized(model.arch.variant);
  const bool with_vol = model.arch.variant == Variant::FactorizedVolatility && !options.unit_volatility;

  Workspace ws;
  run_forward(model, inputs, mode, rng, grads != nullptr, options, ws);
  const ComponentOutput out = collect_output(model, ws, rows);
  const Vector residual = target - out.prediction;

  double loss = 0.0;
  Vector d_pred(rows);
  Vector d_h;
  if (with_vol) {
    const auto e = residual.array();
    const auto h = ws.h_v.array();
    if ((h <= 0.0).any()) throw NumericalError("volatility path must be strictly positive");
    loss = ((e / h).square() + 1.0).cwiseProduct(h).mean();
    d_pred = (-2.0 / n) * (e / h).matrix();
    d_h = ((1.0 - (e / h).square()) / n).matrix();
  } else {
    loss = residual.squaredNorm() / n;
    if (model.arch.variant == Variant::FactorizedVolatility) loss += 1.0;  // unit volatility
    d_pred = (-2.0 / n) * residual;
  }
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
  if (grads == nullptr) return loss;

  if (!is_factorized) {
    for (size_t i = 0; i < model.nets.size(); ++i) {
      backward(model.nets[i], ws.net_caches[i], d_pred, grads->nets[i]);
    }
    return loss;
  }

  const int n_states = model.n_states();
  Matrix d_coef = Matrix::Zero(rows, n_states);
  for (int j = 0; j < n_states; ++j) {
    d_coef.col(j) = d_pred.array() * ws.net_out.col(j).array();
  }

  if (with_vol) {
    const Vector d_slow = d_h.array() * ws.vol_fast.array();
    const Vector d_fast = d_h.array() * ws.vol_slow.array();
    // fast factor: exp path normalized by its (possibly in-batch) mean
    Vector d_exp;
    if (mode == Mode::Train) {
      const double coupling = d_fast.dot(ws.vol_exp) / (n * ws.exp_mean * ws.exp_mean);
      d_exp = (d_fast.array() / ws.exp_mean - coupling).matrix();
    } else {
      d_exp = d_fast / ws.exp_mean;
    }
    const Vector d_v2 = d_exp.array() * ws.vol_exp.array();
    backward(model.vol_net, ws.vol_cache, d_v2, grads->vol_net);
    // slow factor: average of mean-normalized coefficient paths
    for (int j = 0; j < n_states; ++j) {
      const double m = ws.coef_means[j];
      if (mode == Mode::Train) {
        const double coupling = d_slow.dot(ws.coef_out.col(j)) / (n * m * m);
        d_coef.col(j) += ((d_slow.array() / m - coupling) / n_states).matrix();
      } else {
        d_coef.col(j) += d_slow / (m * n_states);
      }
    }
  }

  for (int j = 0; j < n_states; ++j) {
    const Vector d_state = d_pred.array() * ws.coef_out.col(j).array();
    backward(model.nets[static_cast<size_t>(j)], ws.net_caches[static_cast<size_t>(j)], d_state,
             grads->nets[static_cast<size_t>(j)]);
    backward(model.coef_nets[static_cast<size_t>(j)], ws.coef_caches[static_cast<size_t>(j)],
             d_coef.col(j), grads->coef_nets[static_cast<size_t>(j)]);
  }
  if (model.has_trend_component()) {
    backward(model.trend_net, ws.trend_cache, d_pred, grads->trend_net);
  }
  return loss;
}

}  // namespace hnn
