#pragma once

#include "hnn/analysis.hpp"
#include "hnn/bench.hpp"

namespace hnn {

/// Everything a run needs, parsed from one JSON config file. The accepted
/// schema is documented in configs/README.md; unknown keys are rejected.
struct RunConfig {
  std::string data_path;
  std::uint64_t seed = 0;
  int threads = 1;

  TargetSpec target;
  std::vector<HemisphereSpec> hemispheres;
  ArchitectureConfig arch;
  TrainConfig train;
  BuildOptions build;
  Quarter train_end;

  double gap_target_std = 1.0;
  bool recenter = true;
  double band_level = 0.68;

  VIOptions vi;
  std::vector<std::string> vi_hemispheres;  // empty: every state hemisphere
  int vi_top_n = 25;

  bool has_oos = false;
  OosPlan plan;
  BenchmarkSet benchmarks;
  bool oos_run_network = true;
  int oos_ensemble = 0;  // 0: reuse the training ensemble size

  std::vector<std::string> ablation_hemispheres;  // empty: every state hemisphere

  std::string raw_json;  // canonical text for hashing / the manifest
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

}  // namespace hnn
