#pragma once

#include "hnn/model.hpp"
#include "hnn/panel.hpp"
#include "hnn/rng.hpp"

#include <functional>
#include <vector>

namespace hnn::testing {

inline std::vector<double*> net_params(DenseNet& net) {
  std::vector<double*> out;
  for (auto& layer : net.layers) {
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) out.push_back(layer.weights.data() + i);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias.data() + i);
  }
  return out;
}

inline std::vector<double> net_grad_values(const NetGrads& grads) {
  std::vector<double> out;
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < grads.weights[l].size(); ++i) {
      out.push_back(*(grads.weights[l].data() + i));
    }
    for (Eigen::Index i = 0; i < grads.bias[l].size(); ++i) {
      out.push_back(*(grads.bias[l].data() + i));
    }
  }
  return out;
}

inline std::vector<double*> model_params(HnnModel& model) {
  std::vector<double*> out;
  const auto absorb = [&](DenseNet& net) {
    auto p = net_params(net);
    out.insert(out.end(), p.begin(), p.end());
  };
  for (auto& net : model.nets) absorb(net);
  for (auto& net : model.coef_nets) absorb(net);
  if (model.has_trend_component()) absorb(model.trend_net);
  if (model.arch.variant == Variant::FactorizedVolatility) absorb(model.vol_net);
  return out;
}

inline std::vector<double> model_grad_values(const HnnModel& model, const ModelGrads& grads) {
  std::vector<double> out;
  const auto absorb = [&](const NetGrads& g) {
    auto v = net_grad_values(g);
    out.insert(out.end(), v.begin(), v.end());
  };
  for (const auto& g : grads.nets) absorb(g);
  for (const auto& g : grads.coef_nets) absorb(g);
  if (model.has_trend_component()) absorb(grads.trend_net);
  if (model.arch.variant == Variant::FactorizedVolatility) absorb(grads.vol_net);
  return out;
}

/// Max relative error of analytic vs central finite-difference gradients.
/// The floor keeps double-precision FD noise (~eps*|loss|/h) on dead-unit
/// entries from masquerading as relative error.
inline double fd_max_rel_error(std::vector<double*> params, const std::vector<double>& analytic,
                               const std::function<double()>& eval, double h = 1e-5) {
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const double up = eval();
    *params[i] = saved - h;
    const double down = eval();
    *params[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-4});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

/// Hand-assembled feature set for model tests: `cols_per_hemisphere` state
/// hemispheres filled with standard normals, plus target.
inline FeatureSet toy_features(int rows, const std::vector<int>& cols_per_hemisphere,
                               std::uint64_t seed, bool with_trend_component = false,
                               int est_rows = -1) {
  Rng rng(seed);
  FeatureSet fs;
  fs.dates = quarter_range(Quarter(1960, 1), rows);
  fs.est_rows = est_rows < 0 ? rows : est_rows;
  fs.train_end = fs.dates[static_cast<size_t>(fs.est_rows - 1)];
  fs.trend = Vector(rows);
  for (int t = 0; t < rows; ++t) fs.trend[t] = static_cast<double>(t) / (fs.est_rows - 1);
  int h = 0;
  for (int cols : cols_per_hemisphere) {
    FeatureMatrix fm;
    fm.spec.name = "state" + std::to_string(h++);
    fm.spec.role = HemisphereRole::State;
    fm.values = Matrix(rows, cols);
    for (int t = 0; t < rows; ++t) {
      for (int j = 0; j < cols; ++j) fm.values(t, j) = rng.normal();
    }
    for (int j = 0; j < cols; ++j) {
      fm.feature_names.push_back(fm.spec.name + ".x" + std::to_string(j));
      fm.feature_variable.push_back("x" + std::to_string(j / kMarxColumns));
      fm.spec.mnemonics.push_back("x" + std::to_string(j / kMarxColumns));
    }
    fm.card = cols;
    fm.scale_mean = Vector::Zero(cols);
    fm.scale_std = Vector::Ones(cols);
    fs.hemispheres.push_back(std::move(fm));
  }
  if (with_trend_component) {
    FeatureMatrix fm;
    fm.spec.name = "trend_component";
    fm.spec.role = HemisphereRole::Coefficient;
    fm.values = Matrix(rows, 0);
    fm.card = 0;
    fs.hemispheres.push_back(std::move(fm));
  }
  fs.target = Vector(rows);
  for (int t = 0; t < rows; ++t) fs.target[t] = rng.normal();
  return fs;
}

/// Quarterly panel of AR(1)-style positive level series, for the data
/// pipeline tests.
inline RawPanel toy_panel(int rows, std::uint64_t seed) {
  Rng rng(seed);
  RawPanel panel;
  panel.dates = quarter_range(Quarter(1960, 1), rows);
  const auto add = [&](const std::string& name, int tcode, double base, double drift, double vol) {
    Vector x(rows);
    double level = base;
    double state = 0.0;
    for (int t = 0; t < rows; ++t) {
      state = 0.8 * state + rng.normal();
      if (tcode == 1 || tcode == 2) {
        x[t] = drift * t + state * vol;
      } else {
        level *= std::exp(drift + vol * state);
        x[t] = level;
      }
    }
    panel.mnemonics.push_back(name);
    panel.columns[name] = x;
    panel.tcodes[name] = tcode;
  };
  add("CPI", 5, 100.0, 0.005, 0.004);
  add("EMP", 1, 0.0, 0.0, 1.0);
  add("HOURS", 1, 0.0, 0.0, 0.7);
  add("IP", 5, 50.0, 0.004, 0.01);
  add("CLAIMS", 2, 0.0, 0.01, 0.5);
  add("OIL", 5, 30.0, 0.002, 0.02);
  add("SURVEY", 1, 0.0, 0.0, 0.6);
  panel.validate();
  return panel;
}

}  // namespace hnn::testing
