#pragma once

#include "hnn/analysis.hpp"
#include "hnn/bench.hpp"
#include "hnn/train.hpp"

#include <cstdint>

namespace hnn {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a 64-bit, used for config hashes and data fingerprints.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t fnv1a_file(const std::string& path);
std::string hex64(std::uint64_t value);

/// Flat binary weight format: "HNNW" magic, format version, then per net a
/// layer-count header followed by row-major weight matrices and biases.
void save_model(const HnnModel& model, const std::string& path);
HnnModel load_model(const std::string& path);

/// Whole ensemble (members' weights, allocations, seeds) to one file.
void save_ensemble(const Ensemble& ensemble, const std::string& path);
Ensemble load_ensemble(const std::string& path);

/// JSON mirror of the weight format (layer sizes header + row-major arrays).
std::string model_to_json(const HnnModel& model);

struct PathExportOptions {
  double band_level = 0.68;
  double fixed_denominator = 0.0;  // >0 divides OOB sums by this constant
  int min_band_draws = 10;
};

/// Tidy CSV: date, hemisphere, mean, lower, upper, n_draws. Bands are empty
/// when fewer than `min_band_draws` draws cover a date.
void write_components_csv(const ComponentPaths& paths, const std::string& path,
                          const PathExportOptions& options = {});

/// Same tidy layout for factor paths (states, coefficients, volatility,
/// prediction).
void write_factors_csv(const ComponentPaths& paths, const std::string& path,
                       const PathExportOptions& options = {});

void write_vi_csv(const std::vector<VIReport>& reports, const std::string& path);
std::string vi_top_json(const std::vector<VIReport>& reports, int top_n);

void write_forecasts_csv(const std::vector<ForecastRecord>& records, const std::string& path);
void write_summary_csv(const std::vector<RmseSummaryRow>& summary, const std::string& path);

struct DrawLogEntry {
  int draw = 0;
  std::uint64_t seed = 0;
  int attempts = 1;
  int best_epoch = 0;
  double holdout_mse = 0.0;
};

struct RunManifest {
  std::string config_json;  // canonical config text
  std::uint64_t config_hash = 0;
  std::uint64_t data_fingerprint = 0;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  std::string started_at;  // wall-clock stamp; excluded from determinism checks
  std::vector<DrawLogEntry> draws;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

RunManifest manifest_for(const Ensemble& ensemble, const std::string& config_json,
                         std::uint64_t data_fingerprint, double wall_seconds);

}  // namespace hnn
