#include "hnn/config.hpp"
#include "hnn/io.hpp"
#include "hnn/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace hnn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "hnn_out";
  std::int64_t seed = -1;
  int threads = 0;
};

RunConfig load_run_config(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (args.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.train.seed = cfg.seed;
  }
  if (args.threads > 0) {
    cfg.threads = args.threads;
    cfg.train.threads = args.threads;
  }
  return cfg;
}

std::vector<std::string> state_hemispheres(const RunConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& h : cfg.hemispheres) {
    if (h.role == HemisphereRole::State) names.push_back(h.name);
  }
  return names;
}

std::string trend_component_name(const RunConfig& cfg) {
  for (const auto& h : cfg.hemispheres) {
    if (h.role == HemisphereRole::Coefficient) return h.name;
  }
  return "";
}

int cmd_estimate(const CommonArgs& args, const std::string& variant_override) {
  RunConfig cfg = load_run_config(args);
  if (!variant_override.empty()) {
    cfg.arch.variant = variant_from_string(variant_override);
  }
  const RawPanel panel = load_panel_csv(cfg.data_path);
  const FeatureSet features =
      build_features(panel, cfg.hemispheres, cfg.target, cfg.train_end, cfg.build);

  const auto t0 = std::chrono::steady_clock::now();
  const Ensemble ensemble = train_ensemble(cfg.arch, features, cfg.train);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ComponentPaths paths = oob_components(ensemble, features);
  if (paths.factorized) {
    identify_factorization(paths, cfg.gap_target_std);
    const std::string trend = trend_component_name(cfg);
    if (cfg.recenter && !trend.empty()) recenter_components(paths, trend);
  }

  fs::create_directories(args.out_dir);
  PathExportOptions opts;
  opts.band_level = cfg.band_level;
  if (cfg.train.fixed_oob_denominator) {
    opts.fixed_denominator = (1.0 - cfg.train.train_fraction) * cfg.train.ensemble_size;
  }
  write_components_csv(paths, args.out_dir + "/components.csv", opts);
  write_factors_csv(paths, args.out_dir + "/factors.csv", opts);
  save_ensemble(ensemble, args.out_dir + "/ensemble.bin");

  // absolute contribution shares of the aggregated component paths
  {
    Matrix means(paths.rows(), static_cast<Eigen::Index>(paths.components.size()));
    for (size_t c = 0; c < paths.components.size(); ++c) {
      means.col(static_cast<Eigen::Index>(c)) =
          oob_mean(paths.components[c], paths.oob, opts.fixed_denominator);
    }
    std::vector<Eigen::Index> usable;
    for (Eigen::Index t = 0; t < paths.rows(); ++t) {
      if (means.row(t).allFinite() && means.row(t).cwiseAbs().sum() > 0.0) usable.push_back(t);
    }
    Matrix filtered(static_cast<Eigen::Index>(usable.size()), means.cols());
    for (size_t i = 0; i < usable.size(); ++i) filtered.row(static_cast<Eigen::Index>(i)) = means.row(usable[i]);
    const Matrix shares = contribution_shares(filtered);
    std::ofstream out(args.out_dir + "/shares.csv");
    out.precision(10);
    out << "date,hemisphere,share\n";
    for (size_t i = 0; i < usable.size(); ++i) {
      for (size_t c = 0; c < paths.components.size(); ++c) {
        out << paths.dates[static_cast<size_t>(usable[i])].str() << ','
            << paths.components[c].name << ',' << shares(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c))
            << '\n';
      }
    }
  }

  RunManifest manifest =
      manifest_for(ensemble, cfg.raw_json, fnv1a_file(cfg.data_path), wall);
  write_manifest(manifest, args.out_dir + "/manifest.json");

  std::cout << "wrote " << paths.components.size() << " component series to " << args.out_dir
            << " (" << ensemble.members.size() << " draws, " << wall << " s)\n";
  return 0;
}

int cmd_forecast(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args);
  if (!cfg.has_oos) throw ConfigError("config has no 'oos' section");
  const RawPanel panel = load_panel_csv(cfg.data_path);

  OosSettings settings;
  settings.hemispheres = cfg.hemispheres;
  settings.target = cfg.target;
  settings.arch = cfg.arch;
  settings.train = cfg.train;
  settings.build = cfg.build;
  settings.run_network = cfg.oos_run_network;
  if (cfg.oos_ensemble > 0) settings.train.ensemble_size = cfg.oos_ensemble;

  const OosResult result = run_oos(panel, settings, cfg.plan, cfg.benchmarks);
  fs::create_directories(args.out_dir);
  write_forecasts_csv(result.records, args.out_dir + "/forecasts.csv");
  write_summary_csv(result.summary, args.out_dir + "/summary.csv");
  std::cout << "scored " << result.records.size() << " forecasts over origins "
            << cfg.plan.first_origin.str() << ".." << cfg.plan.last_origin.str() << '\n';
  return 0;
}

int cmd_vi(const CommonArgs& args, const std::string& run_dir) {
  RunConfig cfg = load_run_config(args);
  const RawPanel panel = load_panel_csv(cfg.data_path);
  const FeatureSet features =
      build_features(panel, cfg.hemispheres, cfg.target, cfg.train_end, cfg.build);

  Ensemble ensemble;
  if (!run_dir.empty()) {
    ensemble = load_ensemble(run_dir + "/ensemble.bin");
    ensemble.config = cfg.train;
    if (ensemble.est_rows != features.est_rows) {
      throw DataError("stored ensemble does not match the assembled sample");
    }
  } else {
    ensemble = train_ensemble(cfg.arch, features, cfg.train);
  }

  std::vector<std::string> hemis =
      cfg.vi_hemispheres.empty() ? state_hemispheres(cfg) : cfg.vi_hemispheres;
  Rng rng(derive_seed(cfg.seed, 0x51u));
  std::vector<VIReport> reports;
  for (const auto& name : hemis) {
    reports.push_back(variable_importance_report(ensemble, features, name, cfg.vi, rng));
  }

  fs::create_directories(args.out_dir);
  write_vi_csv(reports, args.out_dir + "/vi.csv");
  std::ofstream json_out(args.out_dir + "/vi_top.json");
  json_out << vi_top_json(reports, cfg.vi_top_n) << '\n';
  std::cout << "wrote importance tables for " << reports.size() << " hemispheres\n";
  return 0;
}

std::map<std::string, std::map<std::string, double>> read_vi_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open importance file: " + path);
  std::map<std::string, std::map<std::string, double>> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string hemi, variable, vi;
    std::getline(ss, hemi, ',');
    std::getline(ss, variable, ',');
    std::getline(ss, vi, ',');
    out[hemi][variable] = std::stod(vi);
  }
  return out;
}

int cmd_ablation(const CommonArgs& args, const std::string& vi_path) {
  RunConfig cfg = load_run_config(args);
  const RawPanel panel = load_panel_csv(cfg.data_path);
  const FeatureSet features =
      build_features(panel, cfg.hemispheres, cfg.target, cfg.train_end, cfg.build);

  std::map<std::string, std::map<std::string, double>> vi_weights;
  if (!vi_path.empty()) vi_weights = read_vi_csv(vi_path);

  std::vector<std::string> hemis =
      cfg.ablation_hemispheres.empty() ? state_hemispheres(cfg) : cfg.ablation_hemispheres;

  fs::create_directories(args.out_dir);
  std::ofstream out(args.out_dir + "/ablation.csv");
  if (!out) throw DataError("cannot write ablation.csv");
  out.precision(10);
  out << "date,hemisphere,method,value\n";
  for (const auto& name : hemis) {
    const FeatureMatrix& fm = features.hemisphere(name);
    const PcaResult plain = pca_extract(fm.values);
    for (Eigen::Index t = 0; t < features.rows(); ++t) {
      out << features.dates[static_cast<size_t>(t)].str() << ',' << name << ",pc1,"
          << plain.scores[t] << '\n';
    }
    const auto weights_it = vi_weights.find(name);
    if (weights_it != vi_weights.end()) {
      Vector w(fm.cols());
      for (Eigen::Index j = 0; j < fm.cols(); ++j) {
        const auto& variable = fm.feature_variable[static_cast<size_t>(j)];
        const auto v = weights_it->second.find(variable);
        if (v == weights_it->second.end()) {
          throw DataError("importance file has no entry for '" + variable + "'");
        }
        w[j] = std::max(v->second, 0.0);
      }
      const PcaResult weighted = pca_extract(fm.values, w, plain.scores);
      for (Eigen::Index t = 0; t < features.rows(); ++t) {
        out << features.dates[static_cast<size_t>(t)].str() << ',' << name << ",weighted_pc1,"
            << weighted.scores[t] << '\n';
      }
    }
  }
  std::cout << "wrote extraction paths for " << hemis.size() << " hemispheres\n";
  return 0;
}

int cmd_export(const std::string& run_dir, const std::string& out_dir, int member) {
  const Ensemble ensemble = load_ensemble(run_dir + "/ensemble.bin");
  if (member < 0 || member >= static_cast<int>(ensemble.members.size())) {
    throw ConfigError("member index out of range");
  }
  fs::create_directories(out_dir);
  const std::string json = model_to_json(ensemble.members[static_cast<size_t>(member)].fit.model);
  std::ofstream out(out_dir + "/member_" + std::to_string(member) + ".json");
  out << json << '\n';
  for (const auto& name : {"components.csv", "factors.csv", "manifest.json"}) {
    const fs::path src = fs::path(run_dir) / name;
    if (fs::exists(src)) fs::copy_file(src, fs::path(out_dir) / name, fs::copy_options::overwrite_existing);
  }
  std::cout << "exported member " << member << " weights to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hemisphere network estimation, inference and forecasting"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string variant_override;
  std::string run_dir;
  std::string vi_path;
  std::string export_run, export_out = "hnn_export";
  int export_member = 0;

  const auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config) cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--threads", args.threads, "worker threads for ensemble training");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "train an ensemble and export components");
  add_common(estimate);
  estimate->add_option("--variant", variant_override,
                       "override architecture: additive|factorized|volatility");

  CLI::App* forecast = app.add_subcommand("forecast", "pseudo-out-of-sample benchmark run");
  add_common(forecast);

  CLI::App* vi = app.add_subcommand("vi", "permutation variable importance");
  add_common(vi);
  vi->add_option("--run", run_dir, "reuse a stored ensemble from this estimate output directory");

  CLI::App* ablation = app.add_subcommand("ablation", "principal-component extraction per hemisphere");
  add_common(ablation);
  ablation->add_option("--vi", vi_path, "vi.csv file for the importance-weighted variant");

  CLI::App* exp = app.add_subcommand("export", "convert stored weights to JSON");
  exp->add_option("--run", export_run, "estimate output directory")->required();
  exp->add_option("--out", export_out, "output directory");
  exp->add_option("--member", export_member, "ensemble member to export");

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return cmd_estimate(args, variant_override);
    if (forecast->parsed()) return cmd_forecast(args);
    if (vi->parsed()) return cmd_vi(args, run_dir);
    if (ablation->parsed()) return cmd_ablation(args, vi_path);
    if (exp->parsed()) return cmd_export(export_run, export_out, export_member);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
