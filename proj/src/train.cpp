#include "hnn/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace hnn {

void TrainConfig::validate() const {
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  if (shuffle_block_quarters < 1 || bootstrap_block_quarters < 1) {
    throw ConfigError("block lengths must be >= 1");
  }
  if (ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

Allocation block_allocate(int T, int block_len, double train_frac, Rng& rng) {
  if (block_len < 1) throw ConfigError("block length must be >= 1");
  if (T < 2 * block_len) throw ConfigError("sample too short for the requested block length");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train fraction must be in (0,1)");

  const int n_blocks = (T + block_len - 1) / block_len;
  std::vector<int> order = rng.permutation(n_blocks);
  const int target = static_cast<int>(std::lround(train_frac * T));

  std::vector<bool> in_train(static_cast<size_t>(n_blocks), false);
  int covered = 0;
  size_t next = 0;
  int last_len = 0;
  while (covered < target && next < order.size()) {
    const int blk = order[next++];
    last_len = std::min(block_len, T - blk * block_len);
    in_train[static_cast<size_t>(blk)] = true;
    covered += last_len;
  }
  // land on whichever side of the target is closer; never empty a side
  const bool overshoot_worse = covered - target > target - (covered - last_len);
  if (next > 1 && (next == order.size() || overshoot_worse)) {
    in_train[static_cast<size_t>(order[next - 1])] = false;
  }

  Allocation alloc;
  for (int t = 0; t < T; ++t) {
    if (in_train[static_cast<size_t>(t / block_len)]) alloc.train_rows.push_back(t);
    else alloc.holdout_rows.push_back(t);
  }
  if (alloc.train_rows.empty() || alloc.holdout_rows.empty()) {
    throw NumericalError("degenerate block allocation");
  }
  return alloc;
}

namespace {

/// Adam over every sub-network; ties the trunk layers of additive nets when
/// the architecture shares them.
class ModelOptimizer {
 public:
  ModelOptimizer(const HnnModel& model, const AdamParams& params) {
    for (const auto& net : model.nets) net_states_.push_back(make_adam_state(net, params));
    for (const auto& net : model.coef_nets) coef_states_.push_back(make_adam_state(net, params));
    if (model.has_trend_component()) trend_state_ = make_adam_state(model.trend_net, params);
    if (model.arch.variant == Variant::FactorizedVolatility) {
      vol_state_ = make_adam_state(model.vol_net, params);
    }
  }

  void step(HnnModel& model, ModelGrads& grads) {
    const bool tied = model.arch.variant == Variant::Additive && model.arch.share_trunk &&
                      model.nets.size() > 1;
    if (!tied) {
      for (size_t i = 0; i < model.nets.size(); ++i) {
        adam_step(model.nets[i], grads.nets[i], net_states_[i]);
      }
    } else {
      const size_t n_layers = model.nets[0].layers.size();
      for (size_t l = 1; l + 1 < n_layers; ++l) {
        for (size_t i = 1; i < model.nets.size(); ++i) {
          grads.nets[0].weights[l] += grads.nets[i].weights[l];
          grads.nets[0].bias[l] += grads.nets[i].bias[l];
        }
      }
      adam_step(model.nets[0], grads.nets[0], net_states_[0]);
      const std::vector<size_t> own_layers = {0, n_layers - 1};
      for (size_t i = 1; i < model.nets.size(); ++i) {
        adam_step_layers(model.nets[i], grads.nets[i], net_states_[i], own_layers);
        for (size_t l = 1; l + 1 < n_layers; ++l) model.nets[i].layers[l] = model.nets[0].layers[l];
      }
    }
    for (size_t j = 0; j < model.coef_nets.size(); ++j) {
      adam_step(model.coef_nets[j], grads.coef_nets[j], coef_states_[j]);
    }
    if (model.has_trend_component()) adam_step(model.trend_net, grads.trend_net, trend_state_);
    if (model.arch.variant == Variant::FactorizedVolatility) {
      adam_step(model.vol_net, grads.vol_net, vol_state_);
    }
  }

 private:
  std::vector<AdamState> net_states_;
  std::vector<AdamState> coef_states_;
  AdamState trend_state_;
  AdamState vol_state_;
};

void zero(ModelGrads& grads) {
  for (auto& g : grads.nets) g.set_zero();
  for (auto& g : grads.coef_nets) g.set_zero();
  grads.trend_net.set_zero();
  grads.vol_net.set_zero();
}

Vector gather(const Vector& source, const std::vector<int>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = source[rows[i]];
  return out;
}

}  // namespace

TrainResult train_one(const ArchitectureConfig& arch, const FeatureSet& features,
                      const Allocation& allocation, const TrainConfig& config,
                      std::uint64_t seed) {
  config.validate();
  if (allocation.train_rows.empty() || allocation.holdout_rows.empty()) {
    throw ConfigError("allocation must have non-empty train and holdout sets");
  }
  for (int r : allocation.train_rows) {
    if (r < 0 || r >= features.est_rows) throw ConfigError("allocation row outside estimation sample");
  }

  ArchitectureConfig arch_used = arch;
  arch_used.dropout = config.dropout;

  Rng rng(seed);
  HnnModel model = make_model(arch_used, features, rng);
  ModelOptimizer optimizer(model, config.adam);
  ModelGrads grads = make_model_grads(model);

  const ModelInputs train_inputs = assemble_inputs(model, features, allocation.train_rows);
  const ModelInputs holdout_inputs = assemble_inputs(model, features, allocation.holdout_rows);
  const Vector y_train = gather(features.target, allocation.train_rows);
  const Vector y_holdout = gather(features.target, allocation.holdout_rows);

  // Holdout objective: plain MSE, except the volatility variant which is
  // scored under its own penalized loss (with normalization statistics frozen
  // from the training rows) so the volatility parameters gate the snapshot
  // too.
  const bool vol_objective =
      arch_used.variant == Variant::FactorizedVolatility && !config.unit_volatility;
  const auto holdout_metric = [&](HnnModel& m) {
    double value = 0.0;
    if (vol_objective) {
      freeze_volatility_stats(m, train_inputs);
      const ComponentOutput out = model_forward(m, holdout_inputs, Mode::Eval);
      value = loss_mean_variance(y_holdout, out.prediction, out.volatility);
    } else {
      value = loss_mse(y_holdout, model_forward(m, holdout_inputs, Mode::Eval).prediction);
    }
    if (!std::isfinite(value)) throw NumericalError("non-finite holdout error");
    return value;
  };

  TrainResult result;
  result.holdout_mse_path.push_back(holdout_metric(model));
  result.best_epoch = 0;
  result.best_holdout_mse = result.holdout_mse_path[0];
  result.model = model;

  LossOptions loss_options;
  loss_options.unit_volatility = config.unit_volatility;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    zero(grads);
    model_loss(model, train_inputs, y_train, Mode::Train, &rng, &grads, loss_options);
    optimizer.step(model, grads);
    const double value = holdout_metric(model);
    result.holdout_mse_path.push_back(value);
    if (value < result.best_holdout_mse) {
      result.best_holdout_mse = value;
      result.best_epoch = epoch;
      result.model = model;
    } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
      break;
    }
  }

  freeze_volatility_stats(result.model, train_inputs);
  return result;
}

Ensemble train_ensemble(const ArchitectureConfig& arch, const FeatureSet& features,
                        const TrainConfig& config) {
  config.validate();
  const int T = static_cast<int>(features.est_rows);
  const int B = config.ensemble_size;

  Ensemble ensemble;
  ensemble.arch = arch;
  ensemble.config = config;
  ensemble.est_rows = features.est_rows;
  ensemble.members.resize(static_cast<size_t>(B));

  std::atomic<int> next_draw{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const auto worker = [&]() {
    for (;;) {
      const int b = next_draw.fetch_add(1);
      if (b >= B) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        EnsembleMember member;
        for (int attempt = 0;; ++attempt) {
          const std::uint64_t alloc_seed =
              derive_seed(config.seed, static_cast<std::uint64_t>(b), 2u * attempt);
          const std::uint64_t train_seed =
              derive_seed(config.seed, static_cast<std::uint64_t>(b), 2u * attempt + 1);
          Rng alloc_rng(alloc_seed);
          member.allocation =
              block_allocate(T, config.shuffle_block_quarters, config.train_fraction, alloc_rng);
          member.seed = train_seed;
          member.attempts = attempt + 1;
          try {
            member.fit = train_one(arch, features, member.allocation, config, train_seed);
            break;
          } catch (const NumericalError&) {
            if (attempt >= config.max_retries_per_draw) throw;
          }
        }
        ensemble.members[static_cast<size_t>(b)] = std::move(member);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = std::min(config.threads, B);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return ensemble;
}

Vector ensemble_prediction(const Ensemble& ensemble, const FeatureSet& features) {
  Vector acc;
  for (const auto& member : ensemble.members) {
    const Vector pred = predict(member.fit.model, features).prediction;
    if (acc.size() == 0) acc = pred;
    else acc += pred;
  }
  return acc / static_cast<double>(ensemble.members.size());
}

int ComponentPaths::component_index(const std::string& name) const {
  for (size_t i = 0; i < components.size(); ++i) {
    if (components[i].name == name) return static_cast<int>(i);
  }
  throw ConfigError("unknown component: '" + name + "'");
}

int ComponentPaths::state_index(const std::string& name) const {
  for (size_t i = 0; i < states.size(); ++i) {
    if (states[i].name == name) return static_cast<int>(i);
  }
  throw ConfigError("unknown state path: '" + name + "'");
}

ComponentPaths oob_components(const Ensemble& ensemble, const FeatureSet& features) {
  if (ensemble.members.empty()) throw ConfigError("empty ensemble");
  const Eigen::Index rows = features.rows();
  const int B = static_cast<int>(ensemble.members.size());
  const HnnModel& first = ensemble.members.front().fit.model;

  ComponentPaths paths;
  paths.dates = features.dates;
  paths.est_rows = ensemble.est_rows;
  paths.factorized = first.arch.variant != Variant::Additive;
  paths.has_volatility = first.arch.variant == Variant::FactorizedVolatility;

  paths.oob = BoolArray::Constant(rows, B, false);
  for (int b = 0; b < B; ++b) {
    for (int r : ensemble.members[static_cast<size_t>(b)].allocation.holdout_rows) {
      paths.oob(r, b) = true;
    }
    for (Eigen::Index r = paths.est_rows; r < rows; ++r) paths.oob(r, b) = true;
  }

  const ComponentOutput probe = predict(first, features);
  paths.prediction = {"prediction", Matrix(rows, B)};
  for (const auto& name : probe.component_names) {
    paths.components.push_back({name, Matrix(rows, B)});
  }
  if (paths.factorized) {
    for (int j = 0; j < first.n_states(); ++j) {
      const std::string& name = first.hemisphere_names[static_cast<size_t>(first.state_indices[static_cast<size_t>(j)])];
      paths.states.push_back({name, Matrix(rows, B)});
      paths.coefs.push_back({name, Matrix(rows, B)});
    }
  }
  if (paths.has_volatility) paths.volatility = {"volatility", Matrix(rows, B)};

  const ModelInputs inputs = assemble_inputs(first, features);
  for (int b = 0; b < B; ++b) {
    const ComponentOutput out =
        model_forward(ensemble.members[static_cast<size_t>(b)].fit.model, inputs, Mode::Eval);
    paths.prediction.draws.col(b) = out.prediction;
    for (size_t c = 0; c < paths.components.size(); ++c) {
      paths.components[c].draws.col(b) = out.components.col(static_cast<Eigen::Index>(c));
    }
    for (size_t j = 0; j < paths.states.size(); ++j) {
      paths.states[j].draws.col(b) = out.states.col(static_cast<Eigen::Index>(j));
      paths.coefs[j].draws.col(b) = out.coefs.col(static_cast<Eigen::Index>(j));
    }
    if (paths.has_volatility) paths.volatility.draws.col(b) = out.volatility;
  }
  return paths;
}

Vector oob_mean(const PathDraws& path, const BoolArray& oob, double fixed_denominator) {
  const Eigen::Index rows = path.draws.rows();
  const Eigen::Index B = path.draws.cols();
  Vector out(rows);
  for (Eigen::Index t = 0; t < rows; ++t) {
    double acc = 0.0;
    int n = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
      if (oob(t, b)) {
        acc += path.draws(t, b);
        ++n;
      }
    }
    if (n == 0) {
      out[t] = std::numeric_limits<double>::quiet_NaN();  // gap marker
    } else {
      out[t] = fixed_denominator > 0.0 ? acc / fixed_denominator : acc / static_cast<double>(n);
    }
  }
  return out;
}

Eigen::VectorXi oob_counts(const BoolArray& oob) {
  Eigen::VectorXi out(oob.rows());
  for (Eigen::Index t = 0; t < oob.rows(); ++t) {
    out[t] = static_cast<int>(oob.row(t).count());
  }
  return out;
}

Band credible_band(const PathDraws& path, const BoolArray& oob, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("band level must be in (0,1)");
  const Eigen::Index rows = path.draws.rows();
  Band band{Vector(rows), Vector(rows)};
  const double p_low = (1.0 - level) / 2.0;
  std::vector<double> values;
  for (Eigen::Index t = 0; t < rows; ++t) {
    values.clear();
    for (Eigen::Index b = 0; b < path.draws.cols(); ++b) {
      if (oob(t, b)) values.push_back(path.draws(t, b));
    }
    if (values.size() < 10) {
      throw NumericalError("fewer than 10 draws at " + std::to_string(t) + " for credible band");
    }
    std::sort(values.begin(), values.end());
    band.lower[t] = quantile_sorted(values, p_low);
    band.upper[t] = quantile_sorted(values, 1.0 - p_low);
  }
  return band;
}

void identify_factorization(ComponentPaths& paths, double target_std) {
  if (!paths.factorized) throw ConfigError("identification applies to factorized models");
  if (!(target_std > 0.0)) throw ConfigError("target standard deviation must be positive");
  for (size_t j = 0; j < paths.states.size(); ++j) {
    for (Eigen::Index b = 0; b < paths.states[j].draws.cols(); ++b) {
      const double sd = std_dev(paths.states[j].draws.col(b).head(paths.est_rows));
      if (!(sd > 0.0)) {
        throw NumericalError("zero-variance state path '" + paths.states[j].name + "'");
      }
      const double factor = target_std / sd;
      paths.states[j].draws.col(b) *= factor;
      paths.coefs[j].draws.col(b) /= factor;
    }
  }
}

void recenter_components(ComponentPaths& paths, const std::string& trend_component) {
  if (!paths.factorized) throw ConfigError("recentering applies to factorized models");
  const int trend = paths.component_index(trend_component);
  for (Eigen::Index b = 0; b < paths.prediction.draws.cols(); ++b) {
    double total_shift = 0.0;
    for (size_t c = 0; c < paths.components.size(); ++c) {
      if (static_cast<int>(c) == trend) continue;
      const double mean = paths.components[c].draws.col(b).head(paths.est_rows).mean();
      paths.components[c].draws.col(b).array() -= mean;
      total_shift += mean;
    }
    paths.components[static_cast<size_t>(trend)].draws.col(b).array() += total_shift;
  }
}

}  // namespace hnn
