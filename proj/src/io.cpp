#include "hnn/io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>

namespace hnn {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for fingerprint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(bytes);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

constexpr std::uint32_t kWeightMagic = 0x574e4e48u;  // "HNNW"
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated weight file");
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("truncated weight file");
  return s;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
  }
}

Matrix get_matrix(std::istream& in) {
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(in);
  }
  return m;
}

void put_net(std::ostream& out, const DenseNet& net) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  put<double>(out, net.dropout_rate);
  for (const auto& layer : net.layers) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
    put_matrix(out, layer.weights);
    Matrix bias = layer.bias;
    put_matrix(out, bias);
  }
}

DenseNet get_net(std::istream& in) {
  DenseNet net;
  const auto n_layers = get<std::uint32_t>(in);
  net.dropout_rate = get<double>(in);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    layer.activation = static_cast<Activation>(get<std::uint8_t>(in));
    layer.weights = get_matrix(in);
    const Matrix bias = get_matrix(in);
    layer.bias = bias.row(0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void put_model(std::ostream& out, const HnnModel& model) {
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.arch.variant));
  put<std::uint8_t>(out, model.arch.share_trunk ? 1 : 0);
  put<std::int32_t>(out, model.arch.shared_layers);
  put<std::int32_t>(out, static_cast<std::int32_t>(model.arch.shared_width));
  put<std::int32_t>(out, model.arch.state_layers);
  put<std::int32_t>(out, static_cast<std::int32_t>(model.arch.state_width));
  put<std::int32_t>(out, model.arch.coef_layers);
  put<std::int32_t>(out, static_cast<std::int32_t>(model.arch.coef_width));
  put<std::int32_t>(out, model.arch.vol_layers);
  put<std::int32_t>(out, static_cast<std::int32_t>(model.arch.vol_width));
  put<double>(out, model.arch.dropout);

  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.hemisphere_names.size()));
  for (const auto& name : model.hemisphere_names) put_string(out, name);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.state_indices.size()));
  for (int idx : model.state_indices) put<std::int32_t>(out, idx);
  put<std::int32_t>(out, model.trend_component_index);
  put<std::int32_t>(out, model.volatility_index);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.component_indices.size()));
  for (int idx : model.component_indices) put<std::int32_t>(out, idx);
  for (int idx : model.state_component_cols) put<std::int32_t>(out, idx);
  put<std::int32_t>(out, model.trend_component_col);

  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.nets.size()));
  for (const auto& net : model.nets) put_net(out, net);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.coef_nets.size()));
  for (const auto& net : model.coef_nets) put_net(out, net);
  put<std::uint8_t>(out, model.has_trend_component() ? 1 : 0);
  if (model.has_trend_component()) put_net(out, model.trend_net);
  const bool has_vol = model.arch.variant == Variant::FactorizedVolatility;
  put<std::uint8_t>(out, has_vol ? 1 : 0);
  if (has_vol) {
    put_net(out, model.vol_net);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.vol_coef_means.size()));
    for (Eigen::Index j = 0; j < model.vol_coef_means.size(); ++j) {
      put<double>(out, model.vol_coef_means[j]);
    }
    put<double>(out, model.vol_exp_mean);
  }
}

HnnModel get_model(std::istream& in) {
  HnnModel model;
  model.arch.variant = static_cast<Variant>(get<std::uint8_t>(in));
  model.arch.share_trunk = get<std::uint8_t>(in) != 0;
  model.arch.shared_layers = get<std::int32_t>(in);
  model.arch.shared_width = get<std::int32_t>(in);
  model.arch.state_layers = get<std::int32_t>(in);
  model.arch.state_width = get<std::int32_t>(in);
  model.arch.coef_layers = get<std::int32_t>(in);
  model.arch.coef_width = get<std::int32_t>(in);
  model.arch.vol_layers = get<std::int32_t>(in);
  model.arch.vol_width = get<std::int32_t>(in);
  model.arch.dropout = get<double>(in);

  const auto n_names = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_names; ++i) model.hemisphere_names.push_back(get_string(in));
  const auto n_states = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_states; ++i) model.state_indices.push_back(get<std::int32_t>(in));
  model.trend_component_index = get<std::int32_t>(in);
  model.volatility_index = get<std::int32_t>(in);
  const auto n_components = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_components; ++i) {
    model.component_indices.push_back(get<std::int32_t>(in));
  }
  for (std::uint32_t i = 0; i < n_states; ++i) {
    model.state_component_cols.push_back(get<std::int32_t>(in));
  }
  model.trend_component_col = get<std::int32_t>(in);

  const auto n_nets = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_nets; ++i) model.nets.push_back(get_net(in));
  const auto n_coefs = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_coefs; ++i) model.coef_nets.push_back(get_net(in));
  if (get<std::uint8_t>(in) != 0) model.trend_net = get_net(in);
  if (get<std::uint8_t>(in) != 0) {
    model.vol_net = get_net(in);
    const auto n_means = get<std::uint32_t>(in);
    model.vol_coef_means = Vector(n_means);
    for (std::uint32_t j = 0; j < n_means; ++j) model.vol_coef_means[j] = get<double>(in);
    model.vol_exp_mean = get<double>(in);
  }
  return model;
}

}  // namespace

void save_model(const HnnModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write weight file: " + path);
  put<std::uint32_t>(out, kWeightMagic);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, 1);
  put_model(out, model);
}

HnnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file: " + path);
  if (get<std::uint32_t>(in) != kWeightMagic) throw DataError("not a weight file: " + path);
  if (get<std::uint32_t>(in) != kFormatVersion) throw DataError("unsupported weight format version");
  if (get<std::uint32_t>(in) != 1) throw DataError("expected a single model in " + path);
  return get_model(in);
}

void save_ensemble(const Ensemble& ensemble, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ensemble file: " + path);
  put<std::uint32_t>(out, kWeightMagic);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ensemble.members.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ensemble.est_rows));
  for (const auto& member : ensemble.members) {
    put<std::uint64_t>(out, member.seed);
    put<std::int32_t>(out, member.attempts);
    put<std::int32_t>(out, member.fit.best_epoch);
    put<double>(out, member.fit.best_holdout_mse);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(member.allocation.train_rows.size()));
    for (int r : member.allocation.train_rows) put<std::int32_t>(out, r);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(member.allocation.holdout_rows.size()));
    for (int r : member.allocation.holdout_rows) put<std::int32_t>(out, r);
    put_model(out, member.fit.model);
  }
}

Ensemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ensemble file: " + path);
  if (get<std::uint32_t>(in) != kWeightMagic) throw DataError("not a weight file: " + path);
  if (get<std::uint32_t>(in) != kFormatVersion) throw DataError("unsupported weight format version");
  Ensemble ensemble;
  const auto n = get<std::uint32_t>(in);
  ensemble.est_rows = get<std::uint32_t>(in);
  for (std::uint32_t b = 0; b < n; ++b) {
    EnsembleMember member;
    member.seed = get<std::uint64_t>(in);
    member.attempts = get<std::int32_t>(in);
    member.fit.best_epoch = get<std::int32_t>(in);
    member.fit.best_holdout_mse = get<double>(in);
    const auto n_train = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_train; ++i) {
      member.allocation.train_rows.push_back(get<std::int32_t>(in));
    }
    const auto n_hold = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_hold; ++i) {
      member.allocation.holdout_rows.push_back(get<std::int32_t>(in));
    }
    member.fit.model = get_model(in);
    ensemble.members.push_back(std::move(member));
  }
  if (!ensemble.members.empty()) ensemble.arch = ensemble.members.front().fit.model.arch;
  return ensemble;
}

std::string model_to_json(const HnnModel& model) {
  nlohmann::json root;
  root["variant"] = variant_to_string(model.arch.variant);
  root["hemispheres"] = model.hemisphere_names;
  const auto net_json = [](const DenseNet& net) {
    nlohmann::json j;
    j["dropout"] = net.dropout_rate;
    std::vector<Eigen::Index> sizes{net.input_width()};
    for (const auto& layer : net.layers) sizes.push_back(layer.weights.cols());
    j["layer_sizes"] = sizes;
    for (const auto& layer : net.layers) {
      nlohmann::json lj;
      switch (layer.activation) {
        case Activation::Linear: lj["activation"] = "linear"; break;
        case Activation::Relu: lj["activation"] = "relu"; break;
        case Activation::Abs: lj["activation"] = "abs"; break;
      }
      std::vector<double> w;
      w.reserve(static_cast<size_t>(layer.weights.size()));
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
        for (Eigen::Index jj = 0; jj < layer.weights.cols(); ++jj) w.push_back(layer.weights(i, jj));
      }
      lj["weights_row_major"] = w;
      std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
      lj["bias"] = b;
      j["layers"].push_back(lj);
    }
    return j;
  };
  for (const auto& net : model.nets) root["nets"].push_back(net_json(net));
  for (const auto& net : model.coef_nets) root["coefficient_nets"].push_back(net_json(net));
  if (model.has_trend_component()) root["trend_net"] = net_json(model.trend_net);
  if (model.arch.variant == Variant::FactorizedVolatility) {
    root["volatility_net"] = net_json(model.vol_net);
    std::vector<double> means(model.vol_coef_means.data(),
                              model.vol_coef_means.data() + model.vol_coef_means.size());
    root["volatility_coef_means"] = means;
    root["volatility_exp_mean"] = model.vol_exp_mean;
  }
  return root.dump(2);
}

namespace {

void write_tidy_rows(std::ofstream& out, const ComponentPaths& paths, const PathDraws& path,
                     const std::string& label, const PathExportOptions& options) {
  const Vector mean = oob_mean(path, paths.oob, options.fixed_denominator);
  const Eigen::VectorXi counts = oob_counts(paths.oob);
  const bool bands = counts.minCoeff() >= options.min_band_draws;
  Band band;
  if (bands) band = credible_band(path, paths.oob, options.band_level);
  for (Eigen::Index t = 0; t < paths.rows(); ++t) {
    out << paths.dates[static_cast<size_t>(t)].str() << ',' << label << ',';
    if (std::isfinite(mean[t])) out << mean[t];
    out << ',';
    if (bands) out << band.lower[t];
    out << ',';
    if (bands) out << band.upper[t];
    out << ',' << counts[t] << '\n';
  }
}

}  // namespace

void write_components_csv(const ComponentPaths& paths, const std::string& path,
                          const PathExportOptions& options) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv: " + path);
  out.precision(10);
  out << "date,hemisphere,mean,lower,upper,n_draws\n";
  for (const auto& component : paths.components) {
    write_tidy_rows(out, paths, component, component.name, options);
  }
}

void write_factors_csv(const ComponentPaths& paths, const std::string& path,
                       const PathExportOptions& options) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv: " + path);
  out.precision(10);
  out << "date,series,mean,lower,upper,n_draws\n";
  write_tidy_rows(out, paths, paths.prediction, "prediction", options);
  for (const auto& state : paths.states) write_tidy_rows(out, paths, state, state.name + ".state", options);
  for (const auto& coef : paths.coefs) write_tidy_rows(out, paths, coef, coef.name + ".coef", options);
  if (paths.has_volatility) write_tidy_rows(out, paths, paths.volatility, "volatility", options);
}

void write_vi_csv(const std::vector<VIReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv: " + path);
  out.precision(10);
  out << "hemisphere,variable,vi_pct,rank,reps\n";
  for (const auto& report : reports) {
    for (size_t i = 0; i < report.ranking.size(); ++i) {
      out << report.hemisphere << ',' << report.ranking[i].variable << ',' << report.ranking[i].vi
          << ',' << i + 1 << ',' << report.reps << '\n';
    }
  }
}

std::string vi_top_json(const std::vector<VIReport>& reports, int top_n) {
  nlohmann::json root;
  for (const auto& report : reports) {
    nlohmann::json entry;
    entry["hemisphere"] = report.hemisphere;
    entry["reps"] = report.reps;
    nlohmann::json bars = nlohmann::json::array();
    for (size_t i = 0; i < report.ranking.size() && i < static_cast<size_t>(top_n); ++i) {
      bars.push_back({{"variable", report.ranking[i].variable}, {"vi_pct", report.ranking[i].vi}});
    }
    entry["top"] = bars;
    root.push_back(entry);
  }
  return root.dump(2);
}

void write_forecasts_csv(const std::vector<ForecastRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv: " + path);
  out.precision(10);
  out << "origin,model,horizon,forecast,realized,predicted_vol\n";
  for (const auto& r : records) {
    out << r.origin.str() << ',' << r.model << ',' << r.horizon << ',' << r.forecast << ',';
    if (r.has_realized) out << r.realized;
    out << ',';
    if (r.has_vol) out << r.predicted_vol;
    out << '\n';
  }
}

void write_summary_csv(const std::vector<RmseSummaryRow>& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv: " + path);
  out.precision(10);
  out << "model,rmse,ratio_to_ar4,rmse_excl,ratio_to_ar4_excl,n_included,n_excluded\n";
  for (const auto& row : summary) {
    out << row.model << ',' << row.rmse_all << ',' << row.ratio_all << ',' << row.rmse_excl << ','
        << row.ratio_excl << ',' << row.n_included << ',' << row.n_excluded << '\n';
  }
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json root;
  root["version"] = manifest.version;
  root["config_hash"] = hex64(manifest.config_hash);
  root["data_fingerprint"] = hex64(manifest.data_fingerprint);
  root["seed"] = manifest.seed;
  root["wall_seconds"] = manifest.wall_seconds;
  root["started_at"] = manifest.started_at;
  root["config"] = nlohmann::json::parse(manifest.config_json, nullptr, false);
  nlohmann::json draws = nlohmann::json::array();
  for (const auto& d : manifest.draws) {
    draws.push_back({{"draw", d.draw},
                     {"seed", d.seed},
                     {"attempts", d.attempts},
                     {"best_epoch", d.best_epoch},
                     {"holdout_mse", d.holdout_mse}});
  }
  root["draws"] = draws;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << root.dump(2) << '\n';
}

RunManifest manifest_for(const Ensemble& ensemble, const std::string& config_json,
                         std::uint64_t data_fingerprint, double wall_seconds) {
  RunManifest manifest;
  manifest.config_json = config_json;
  manifest.config_hash = fnv1a(config_json);
  manifest.data_fingerprint = data_fingerprint;
  manifest.seed = ensemble.config.seed;
  manifest.wall_seconds = wall_seconds;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest.started_at = buf;
  for (size_t b = 0; b < ensemble.members.size(); ++b) {
    const auto& member = ensemble.members[b];
    manifest.draws.push_back({static_cast<int>(b), member.seed, member.attempts,
                              member.fit.best_epoch, member.fit.best_holdout_mse});
  }
  return manifest;
}

}  // namespace hnn
