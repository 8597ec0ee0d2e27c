#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "hnn/config.hpp"
#include "hnn/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace hnn;
using namespace hnn::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("hnn_io_" + std::to_string(Rng(std::random_device{}()).next_u64() % 1000000));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

HnnModel sample_model(Variant variant, std::uint64_t seed) {
  FeatureSet fs = toy_features(30, {4, 3}, seed, true);
  ArchitectureConfig arch;
  arch.variant = variant;
  arch.state_layers = 2;
  arch.state_width = 6;
  arch.coef_layers = 1;
  arch.coef_width = 4;
  arch.vol_layers = 1;
  arch.vol_width = 4;
  arch.shared_layers = 2;
  arch.shared_width = 6;
  arch.dropout = 0.1;
  Rng rng(seed + 1);
  return make_model(arch, fs, rng);
}

}  // namespace

TEST_CASE("fnv-1a matches the published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("model weights survive a binary round trip bit-exactly") {
  TempDir dir;
  for (Variant variant :
       {Variant::Additive, Variant::Factorized, Variant::FactorizedVolatility}) {
    const HnnModel model = sample_model(variant, 7);
    const std::string path = dir.file("model.bin");
    save_model(model, path);
    const HnnModel back = load_model(path);
    CHECK(back.arch.variant == model.arch.variant);
    CHECK(back.hemisphere_names == model.hemisphere_names);
    REQUIRE(back.nets.size() == model.nets.size());
    for (size_t n = 0; n < model.nets.size(); ++n) {
      for (size_t l = 0; l < model.nets[n].layers.size(); ++l) {
        CHECK(back.nets[n].layers[l].weights == model.nets[n].layers[l].weights);
        CHECK(back.nets[n].layers[l].bias == model.nets[n].layers[l].bias);
        CHECK(back.nets[n].layers[l].activation == model.nets[n].layers[l].activation);
      }
    }
    if (variant == Variant::FactorizedVolatility) {
      CHECK(back.vol_coef_means == model.vol_coef_means);
      CHECK(back.vol_exp_mean == model.vol_exp_mean);
    }
  }
}

TEST_CASE("loading a non-weight file is rejected") {
  TempDir dir;
  const std::string path = dir.file("junk.bin");
  std::ofstream(path) << "this is not a weight file";
  CHECK_THROWS_AS(load_model(path), DataError);
  CHECK_THROWS_AS(load_ensemble(path), DataError);
}

TEST_CASE("ensembles round trip with allocations and seeds") {
  TempDir dir;
  FeatureSet fs = toy_features(60, {4}, 11);
  ArchitectureConfig arch;
  arch.variant = Variant::Factorized;
  arch.state_layers = 1;
  arch.state_width = 6;
  arch.coef_layers = 1;
  arch.coef_width = 4;
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.ensemble_size = 3;
  cfg.dropout = 0.0;
  cfg.seed = 5;
  const Ensemble ensemble = train_ensemble(arch, fs, cfg);
  save_ensemble(ensemble, dir.file("ens.bin"));
  const Ensemble back = load_ensemble(dir.file("ens.bin"));
  REQUIRE(back.members.size() == ensemble.members.size());
  CHECK(back.est_rows == ensemble.est_rows);
  for (size_t b = 0; b < back.members.size(); ++b) {
    CHECK(back.members[b].seed == ensemble.members[b].seed);
    CHECK(back.members[b].allocation.train_rows == ensemble.members[b].allocation.train_rows);
    CHECK(back.members[b].allocation.holdout_rows == ensemble.members[b].allocation.holdout_rows);
    CHECK(back.members[b].fit.model.nets[0].layers[0].weights ==
          ensemble.members[b].fit.model.nets[0].layers[0].weights);
  }
}

TEST_CASE("the JSON weight export carries layer sizes and row-major matrices") {
  const HnnModel model = sample_model(Variant::Factorized, 13);
  const auto parsed = nlohmann::json::parse(model_to_json(model));
  CHECK(parsed["variant"] == "factorized");
  REQUIRE(parsed.contains("nets"));
  const auto& net0 = parsed["nets"][0];
  const auto sizes = net0["layer_sizes"].get<std::vector<int>>();
  REQUIRE(sizes.size() >= 2);
  CHECK(sizes.front() == model.nets[0].input_width());
  CHECK(sizes.back() == 1);
  const auto w = net0["layers"][0]["weights_row_major"].get<std::vector<double>>();
  CHECK(static_cast<Eigen::Index>(w.size()) == model.nets[0].layers[0].weights.size());
  CHECK(w[1] == model.nets[0].layers[0].weights(0, 1));  // row-major order
}

TEST_CASE("component and factor CSV exports are tidy") {
  TempDir dir;
  FeatureSet fs = toy_features(70, {4, 3}, 17, true);
  ArchitectureConfig arch;
  arch.variant = Variant::Factorized;
  arch.state_layers = 1;
  arch.state_width = 6;
  arch.coef_layers = 1;
  arch.coef_width = 4;
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.ensemble_size = 12;
  cfg.dropout = 0.0;
  cfg.seed = 3;
  const Ensemble ensemble = train_ensemble(arch, fs, cfg);
  const ComponentPaths paths = oob_components(ensemble, fs);
  write_components_csv(paths, dir.file("components.csv"));

  std::ifstream in(dir.file("components.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "date,hemisphere,mean,lower,upper,n_draws");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(paths.components.size()) * fs.rows());

  write_factors_csv(paths, dir.file("factors.csv"));
  std::ifstream fin(dir.file("factors.csv"));
  std::getline(fin, header);
  CHECK(header == "date,series,mean,lower,upper,n_draws");
}

TEST_CASE("manifests serialize config hash, fingerprint and draw log") {
  TempDir dir;
  FeatureSet fs = toy_features(60, {4}, 19);
  ArchitectureConfig arch;
  arch.variant = Variant::Additive;
  arch.shared_layers = 1;
  arch.shared_width = 4;
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.ensemble_size = 2;
  cfg.dropout = 0.0;
  cfg.seed = 21;
  const Ensemble ensemble = train_ensemble(arch, fs, cfg);
  RunManifest manifest = manifest_for(ensemble, "{\"seed\": 21}", 0xabcdULL, 1.5);
  write_manifest(manifest, dir.file("manifest.json"));

  std::ifstream in(dir.file("manifest.json"));
  const auto parsed = nlohmann::json::parse(in);
  CHECK(parsed["seed"] == 21);
  CHECK(parsed["data_fingerprint"] == "000000000000abcd");
  CHECK(parsed["draws"].size() == 2);
  CHECK(parsed["config"]["seed"] == 21);
  CHECK(parsed["config_hash"] == hex64(fnv1a("{\"seed\": 21}")));
}

TEST_CASE("run configs parse with defaults and reject unknown keys") {
  const std::string good = R"({
    "data": "data/synthetic.csv",
    "seed": 42,
    "variant": "volatility",
    "target": {"mnemonic": "CPI_SYN", "horizon": 1},
    "sample": {"start": "1961Q3", "end": "2015Q4"},
    "hemispheres": [
      {"name": "lr", "role": "coefficient"},
      {"name": "activity", "mnemonics": ["ACT01", "ACT02"]},
      {"name": "prices", "mnemonics": ["PRICE01", "Y"]}
    ],
    "training": {"ensemble": 7, "dropout": 0.1},
    "identification": {"gap_target_std": 2.5}
  })";
  const RunConfig cfg = parse_config(good);
  CHECK(cfg.seed == 42);
  CHECK(cfg.arch.variant == Variant::FactorizedVolatility);
  CHECK(cfg.arch.dropout == 0.1);
  CHECK(cfg.train.ensemble_size == 7);
  CHECK(cfg.train.max_epochs == 500);          // paper default
  CHECK(cfg.train.adam.learning_rate == 0.005);  // paper default
  CHECK(cfg.train.train_fraction == 0.85);
  CHECK(cfg.train.shuffle_block_quarters == 6);
  CHECK(cfg.gap_target_std == 2.5);
  CHECK(cfg.hemispheres.size() == 3);
  CHECK(cfg.hemispheres[0].role == HemisphereRole::Coefficient);
  CHECK(cfg.train_end == Quarter(2015, 4));

  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": "x.csv", "turbo": true,
    "target": {"mnemonic": "Y"}, "sample": {"end": "2000Q4"},
    "hemispheres": [{"name": "a", "mnemonics": ["M"]}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": "x.csv", "variant": "quantum",
    "target": {"mnemonic": "Y"}, "sample": {"end": "2000Q4"},
    "hemispheres": [{"name": "a", "mnemonics": ["M"]}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": "x.csv",
    "target": {"mnemonic": "Y"}, "sample": {"end": "2000Q4"},
    "hemispheres": []})"),
                  ConfigError);
}

TEST_CASE("oos sections configure the benchmark harness") {
  const std::string text = R"({
    "data": "d.csv",
    "target": {"mnemonic": "CPI_SYN", "horizon": 4, "aggregation": "mean-over-horizon"},
    "sample": {"end": "2007Q4"},
    "hemispheres": [{"name": "a", "mnemonics": ["M"]}],
    "oos": {
      "first_origin": "2008Q1", "last_origin": "2021Q3",
      "estimation_start": "1961Q3", "nn_cadence": 4,
      "exclude": ["2020Q1", "2020Q2", "2020Q3", "2020Q4", "2021Q1", "2021Q2"],
      "benchmarks": ["ar4", "mean_1y", "mean_10y", "pc"],
      "gap_mnemonic": "GAP",
      "external": {"ckp": "ckp.csv"}
    }
  })";
  const RunConfig cfg = parse_config(text);
  CHECK(cfg.has_oos);
  CHECK(cfg.plan.first_origin == Quarter(2008, 1));
  CHECK(cfg.plan.last_origin == Quarter(2021, 3));
  CHECK(cfg.plan.nn_cadence == 4);
  CHECK(cfg.plan.exclusions.size() == 6);
  CHECK(cfg.benchmarks.pc);
  CHECK_FALSE(cfg.benchmarks.pc_plus);
  CHECK(cfg.benchmarks.gap_mnemonic == "GAP");
  CHECK(cfg.benchmarks.external_csv.at("ckp") == "ckp.csv");
  CHECK(cfg.target.aggregation == TargetAggregation::MeanOverHorizon);
}

TEST_CASE("panels round trip through CSV") {
  TempDir dir;
  const RawPanel panel = toy_panel(90, 23);
  save_panel_csv(panel, dir.file("panel.csv"));
  const RawPanel back = load_panel_csv(dir.file("panel.csv"));
  CHECK(back.mnemonics == panel.mnemonics);
  CHECK(back.dates == panel.dates);
  for (const auto& name : panel.mnemonics) {
    CHECK(back.tcode(name) == panel.tcode(name));
    CHECK((back.column(name) - panel.column(name)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("panel loader flags interior gaps and ragged rows") {
  TempDir dir;
  {
    std::ofstream out(dir.file("gap.csv"));
    out << "date,A\ntcode,1\n1990Q1,1\n1990Q2,\n1990Q3,3\n";
  }
  CHECK_THROWS_AS(load_panel_csv(dir.file("gap.csv")), DataError);
  {
    std::ofstream out(dir.file("ragged.csv"));
    out << "date,A,B\ntcode,1,1\n1990Q1,1\n";
  }
  CHECK_THROWS_AS(load_panel_csv(dir.file("ragged.csv")), DataError);
  {
    std::ofstream out(dir.file("head.csv"));
    out << "date,A\ntcode,1\n1990Q1,\n1990Q2,2\n1990Q3,3\n";
  }
  CHECK_NOTHROW(load_panel_csv(dir.file("head.csv")));  // leading gap is fine
}
