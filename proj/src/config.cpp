#include "hnn/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace hnn {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T read(const json& obj, const std::string& key, const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing '" + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "' in " + where);
  }
}

Quarter read_quarter(const json& obj, const std::string& key, const std::string& where) {
  try {
    return Quarter::parse(require<std::string>(obj, key, where));
  } catch (const DataError& e) {
    throw ConfigError(std::string(e.what()) + " (key '" + key + "')");
  }
}

HemisphereRole role_from_string(const std::string& role) {
  if (role == "state") return HemisphereRole::State;
  if (role == "coefficient") return HemisphereRole::Coefficient;
  if (role == "volatility") return HemisphereRole::Volatility;
  throw ConfigError("unknown hemisphere role: '" + role + "'");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("config is not valid JSON");
  check_keys(root, "config",
             {"data", "seed", "threads", "variant", "target", "sample", "hemispheres",
              "architecture", "training", "features", "identification", "vi", "oos", "ablation"});

  RunConfig cfg;
  cfg.raw_json = root.dump(2);
  cfg.data_path = require<std::string>(root, "data", "config");
  cfg.seed = read<std::uint64_t>(root, "seed", 0);
  cfg.threads = read<int>(root, "threads", 1);
  cfg.arch.variant = variant_from_string(read<std::string>(root, "variant", "factorized"));

  {
    const json& t = root.at("target");
    check_keys(t, "target", {"mnemonic", "horizon", "aggregation", "horizon_sum", "tcode", "scale"});
    cfg.target.mnemonic = require<std::string>(t, "mnemonic", "target");
    cfg.target.horizon = read<int>(t, "horizon", 1);
    const std::string agg = read<std::string>(t, "aggregation", "one-step");
    if (agg == "one-step") cfg.target.aggregation = TargetAggregation::OneStep;
    else if (agg == "mean-over-horizon") cfg.target.aggregation = TargetAggregation::MeanOverHorizon;
    else throw ConfigError("target aggregation must be 'one-step' or 'mean-over-horizon'");
    cfg.target.horizon_sum = read<bool>(t, "horizon_sum", false);
    if (t.contains("tcode")) cfg.target.tcode_override = require<int>(t, "tcode", "target");
    cfg.target.scale = read<double>(t, "scale", 1.0);
    cfg.target.validate();
  }

  {
    const json& s = root.at("sample");
    check_keys(s, "sample", {"start", "end"});
    cfg.train_end = read_quarter(s, "end", "sample");
    if (s.contains("start")) cfg.build.sample_start = read_quarter(s, "start", "sample");
  }

  if (!root.contains("hemispheres") || !root.at("hemispheres").is_array() ||
      root.at("hemispheres").empty()) {
    throw ConfigError("config needs a non-empty 'hemispheres' array");
  }
  for (const auto& h : root.at("hemispheres")) {
    check_keys(h, "hemisphere", {"name", "role", "mnemonics", "include_trend"});
    HemisphereSpec spec;
    spec.name = require<std::string>(h, "name", "hemisphere");
    spec.role = role_from_string(read<std::string>(h, "role", "state"));
    spec.mnemonics = read<std::vector<std::string>>(h, "mnemonics", {});
    spec.include_trend = read<bool>(h, "include_trend", true);
    cfg.hemispheres.push_back(std::move(spec));
  }

  if (root.contains("architecture")) {
    const json& a = root.at("architecture");
    check_keys(a, "architecture",
               {"state_layers", "state_width", "coef_layers", "coef_width", "vol_layers",
                "vol_width", "shared_layers", "shared_width", "share_trunk"});
    cfg.arch.state_layers = read<int>(a, "state_layers", cfg.arch.state_layers);
    cfg.arch.state_width = read<int>(a, "state_width", static_cast<int>(cfg.arch.state_width));
    cfg.arch.coef_layers = read<int>(a, "coef_layers", cfg.arch.coef_layers);
    cfg.arch.coef_width = read<int>(a, "coef_width", static_cast<int>(cfg.arch.coef_width));
    cfg.arch.vol_layers = read<int>(a, "vol_layers", cfg.arch.vol_layers);
    cfg.arch.vol_width = read<int>(a, "vol_width", static_cast<int>(cfg.arch.vol_width));
    cfg.arch.shared_layers = read<int>(a, "shared_layers", cfg.arch.shared_layers);
    cfg.arch.shared_width = read<int>(a, "shared_width", static_cast<int>(cfg.arch.shared_width));
    cfg.arch.share_trunk = read<bool>(a, "share_trunk", cfg.arch.share_trunk);
  }

  if (root.contains("training")) {
    const json& t = root.at("training");
    check_keys(t, "training",
               {"max_epochs", "learning_rate", "train_fraction", "shuffle_block_quarters",
                "dropout", "ensemble", "bootstrap_block_quarters", "retries",
                "fixed_oob_denominator", "patience"});
    cfg.train.max_epochs = read<int>(t, "max_epochs", cfg.train.max_epochs);
    cfg.train.adam.learning_rate = read<double>(t, "learning_rate", cfg.train.adam.learning_rate);
    cfg.train.train_fraction = read<double>(t, "train_fraction", cfg.train.train_fraction);
    cfg.train.shuffle_block_quarters =
        read<int>(t, "shuffle_block_quarters", cfg.train.shuffle_block_quarters);
    cfg.train.dropout = read<double>(t, "dropout", cfg.train.dropout);
    cfg.train.ensemble_size = read<int>(t, "ensemble", cfg.train.ensemble_size);
    cfg.train.bootstrap_block_quarters =
        read<int>(t, "bootstrap_block_quarters", cfg.train.bootstrap_block_quarters);
    cfg.train.max_retries_per_draw = read<int>(t, "retries", cfg.train.max_retries_per_draw);
    cfg.train.fixed_oob_denominator =
        read<bool>(t, "fixed_oob_denominator", cfg.train.fixed_oob_denominator);
    cfg.train.patience = read<int>(t, "patience", cfg.train.patience);
  }
  cfg.train.seed = cfg.seed;
  cfg.train.threads = cfg.threads;
  cfg.arch.dropout = cfg.train.dropout;

  if (root.contains("features")) {
    const json& f = root.at("features");
    check_keys(f, "features", {"lag_base", "allow_overlap", "tcode_overrides"});
    cfg.build.lag_base = read<int>(f, "lag_base", 0);
    cfg.build.allow_overlap = read<bool>(f, "allow_overlap", false);
    if (f.contains("tcode_overrides")) {
      for (const auto& [name, code] : f.at("tcode_overrides").items()) {
        if (!code.is_number_integer()) throw ConfigError("tcode override must be an integer");
        cfg.build.tcode_overrides[name] = code.get<int>();
      }
    }
  }

  if (root.contains("identification")) {
    const json& id = root.at("identification");
    check_keys(id, "identification", {"gap_target_std", "recenter", "band_level"});
    cfg.gap_target_std = read<double>(id, "gap_target_std", 1.0);
    cfg.recenter = read<bool>(id, "recenter", true);
    cfg.band_level = read<double>(id, "band_level", 0.68);
  }

  if (root.contains("vi")) {
    const json& v = root.at("vi");
    check_keys(v, "vi", {"reps", "joint_shuffle", "oob_only", "hemispheres", "top_n"});
    cfg.vi.reps = read<int>(v, "reps", cfg.vi.reps);
    cfg.vi.joint_shuffle = read<bool>(v, "joint_shuffle", cfg.vi.joint_shuffle);
    cfg.vi.oob_only = read<bool>(v, "oob_only", cfg.vi.oob_only);
    cfg.vi_hemispheres = read<std::vector<std::string>>(v, "hemispheres", {});
    cfg.vi_top_n = read<int>(v, "top_n", cfg.vi_top_n);
  }

  if (root.contains("oos")) {
    cfg.has_oos = true;
    const json& o = root.at("oos");
    check_keys(o, "oos",
               {"first_origin", "last_origin", "estimation_start", "nn_cadence", "bench_cadence",
                "exclude", "benchmarks", "gap_mnemonic", "extra_mnemonics", "external",
                "run_network", "ensemble"});
    cfg.plan.first_origin = read_quarter(o, "first_origin", "oos");
    cfg.plan.last_origin = read_quarter(o, "last_origin", "oos");
    if (o.contains("estimation_start")) {
      cfg.plan.estimation_start = read_quarter(o, "estimation_start", "oos");
    }
    cfg.plan.nn_cadence = read<int>(o, "nn_cadence", cfg.plan.nn_cadence);
    cfg.plan.bench_cadence = read<int>(o, "bench_cadence", cfg.plan.bench_cadence);
    for (const auto& q : read<std::vector<std::string>>(o, "exclude", {})) {
      cfg.plan.exclusions.push_back(Quarter::parse(q));
    }
    cfg.oos_run_network = read<bool>(o, "run_network", true);
    cfg.oos_ensemble = read<int>(o, "ensemble", 0);
    const auto names = read<std::vector<std::string>>(
        o, "benchmarks", {"ar4", "mean_1y", "mean_10y"});
    cfg.benchmarks.ar4 = cfg.benchmarks.mean_1y = cfg.benchmarks.mean_10y = false;
    for (const auto& name : names) {
      if (name == "ar4") cfg.benchmarks.ar4 = true;
      else if (name == "mean_1y") cfg.benchmarks.mean_1y = true;
      else if (name == "mean_10y") cfg.benchmarks.mean_10y = true;
      else if (name == "pc") cfg.benchmarks.pc = true;
      else if (name == "pc_plus") cfg.benchmarks.pc_plus = true;
      else throw ConfigError("unknown benchmark: '" + name + "'");
    }
    cfg.benchmarks.gap_mnemonic = read<std::string>(o, "gap_mnemonic", "");
    cfg.benchmarks.extra_mnemonics = read<std::vector<std::string>>(o, "extra_mnemonics", {});
    if (o.contains("external")) {
      for (const auto& [model_id, path] : o.at("external").items()) {
        if (!path.is_string()) throw ConfigError("external forecast path must be a string");
        cfg.benchmarks.external_csv[model_id] = path.get<std::string>();
      }
    }
  }

  if (root.contains("ablation")) {
    const json& a = root.at("ablation");
    check_keys(a, "ablation", {"hemispheres"});
    cfg.ablation_hemispheres = read<std::vector<std::string>>(a, "hemispheres", {});
  }

  cfg.train.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace hnn
