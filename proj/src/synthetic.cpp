#include "hnn/synthetic.hpp"

#include "hnn/rng.hpp"

#include <cmath>

namespace hnn {

RawPanel make_synthetic_panel(std::uint64_t seed, int quarters, Quarter first) {
  if (quarters < 80) throw ConfigError("synthetic panel needs at least 80 quarters");
  Rng rng(seed ? seed : 1);
  const int T = quarters;

  Vector cycle(T), expec(T), commod(T);
  double c = 0.0, e = 0.0, o = 0.0;
  for (int t = 0; t < T; ++t) {
    c = 0.85 * c + 0.35 * rng.normal();
    e = 0.70 * e + 0.30 * rng.normal();
    o = 0.60 * o + 0.50 * rng.normal();
    cycle[t] = c;
    expec[t] = e;
    commod[t] = o;
  }

  // Pass-through declines over the sample, as a slow sigmoid.
  Vector pass(T), pi(T);
  for (int t = 0; t < T; ++t) {
    const double z = (static_cast<double>(t) / T - 0.45) * 8.0;
    pass[t] = 0.4 + 1.0 / (1.0 + std::exp(z));
    pi[t] = 0.008 + 0.004 * pass[t] * std::tanh(cycle[t]) + 0.0035 * expec[t] +
            0.0020 * commod[t] + 0.0015 * rng.normal();
  }

  RawPanel panel;
  panel.dates = quarter_range(first, T);

  const auto add = [&](const std::string& name, const Vector& values, int tcode) {
    panel.mnemonics.push_back(name);
    panel.columns[name] = values;
    panel.tcodes[name] = tcode;
  };
  const auto level_from_growth = [&](const Vector& growth, double base) {
    Vector level(T);
    double acc = std::log(base);
    for (int t = 0; t < T; ++t) {
      acc += growth[t];
      level[t] = std::exp(acc);
    }
    return level;
  };

  // Target price index.
  add("CPI_SYN", level_from_growth(pi, 100.0), 5);

  // Real-activity block: stationary loadings on the cycle plus noise.
  const double loadings[5] = {1.0, 0.8, -0.6, 0.9, 0.5};
  for (int k = 0; k < 5; ++k) {
    Vector x(T);
    for (int t = 0; t < T; ++t) x[t] = loadings[k] * cycle[t] + 0.5 * rng.normal();
    add("ACT0" + std::to_string(k + 1), x, 1);
  }
  {
    // A cumulated activity series (first differences are informative).
    Vector x(T);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      acc += 0.4 * cycle[t] + 0.3 * rng.normal();
      x[t] = acc;
    }
    add("ACT06", x, 2);
  }
  {
    // An activity level series with a missing early history.
    Vector growth(T);
    for (int t = 0; t < T; ++t) growth[t] = 0.004 + 0.004 * cycle[t] + 0.002 * rng.normal();
    Vector x = level_from_growth(growth, 50.0);
    for (int t = 0; t < 8; ++t) x[t] = std::numeric_limits<double>::quiet_NaN();
    add("ACT07", x, 5);
  }

  // Price / expectations block.
  for (int k = 0; k < 2; ++k) {
    Vector x(T);
    for (int t = 0; t < T; ++t) {
      x[t] = expec[t] + 0.4 * pi[t] / 0.01 + 0.3 * rng.normal();
    }
    add("EXP_SURVEY" + std::to_string(k + 1), x, 1);
  }
  for (int k = 0; k < 2; ++k) {
    Vector growth(T);
    for (int t = 0; t < T; ++t) growth[t] = 0.9 * pi[t] + 0.002 * rng.normal();
    add("PRICE0" + std::to_string(k + 1), level_from_growth(growth, 80.0), 5);
  }

  // Commodity block.
  for (int k = 0; k < 2; ++k) {
    Vector growth(T);
    for (int t = 0; t < T; ++t) growth[t] = 0.02 * commod[t] + 0.008 * rng.normal();
    add(k == 0 ? "OIL_SYN" : "METAL_SYN", level_from_growth(growth, 30.0), 5);
  }

  panel.validate();
  return panel;
}

}  // namespace hnn
