#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "hnn/analysis.hpp"

#include <cmath>

using namespace hnn;
using namespace hnn::testing;

namespace {

ArchitectureConfig tiny_arch(Variant variant) {
  ArchitectureConfig arch;
  arch.variant = variant;
  arch.shared_layers = 2;
  arch.shared_width = 16;
  arch.state_layers = 2;
  arch.state_width = 16;
  arch.coef_layers = 2;
  arch.coef_width = 8;
  arch.dropout = 0.0;
  return arch;
}

TrainConfig quick_config(int epochs, int ensemble, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.ensemble_size = ensemble;
  cfg.dropout = 0.0;
  cfg.adam.learning_rate = 0.01;
  cfg.seed = seed;
  return cfg;
}

/// Feature set with named variables: n_vars variables x 7 columns each, a
/// target driven only by variable 0's contemporaneous column, and the
/// production 1/sqrt(card) feature scaling.
FeatureSet planted_driver(int rows, int n_vars, std::uint64_t seed, double noise_sd = 0.1) {
  const int p = n_vars * kMarxColumns;
  FeatureSet fs = toy_features(rows, {p}, seed);
  Rng rng(seed + 500);
  for (int t = 0; t < rows; ++t) {
    fs.target[t] = std::tanh(2.0 * fs.hemispheres[0].values(t, 0)) + noise_sd * rng.normal();
  }
  fs.hemispheres[0].values /= std::sqrt(static_cast<double>(p));
  fs.hemispheres[0].card = p;
  return fs;
}

Ensemble wrap_single(const HnnModel& model, Eigen::Index est_rows) {
  Ensemble ensemble;
  ensemble.arch = model.arch;
  ensemble.est_rows = est_rows;
  EnsembleMember member;
  member.fit.model = model;
  for (int t = 0; t < est_rows; ++t) {
    if (t % 5 == 0) member.allocation.holdout_rows.push_back(t);
    else member.allocation.train_rows.push_back(t);
  }
  ensemble.members.push_back(std::move(member));
  return ensemble;
}

}  // namespace

TEST_CASE("an input with zero pathwise influence has exactly zero importance") {
  FeatureSet fs = toy_features(60, {2 * kMarxColumns}, 1);
  Rng rng(2);
  HnnModel model = make_model(tiny_arch(Variant::Factorized), fs, rng);
  // cut every first-layer weight attached to variable x1's columns
  for (int col = kMarxColumns; col < 2 * kMarxColumns; ++col) {
    model.nets[0].layers[0].weights.row(col).setZero();
  }
  const Ensemble ensemble = wrap_single(model, fs.est_rows);
  VIOptions options;
  options.reps = 200;
  options.oob_only = false;
  Rng vi_rng(3);
  const double vi = variable_importance(ensemble, fs, "state0", "x1", options, vi_rng);
  CHECK(vi == 0.0);
  const double vi_live = variable_importance(ensemble, fs, "state0", "x0", options, vi_rng);
  CHECK(vi_live > 1.0);
}

TEST_CASE("shuffling a constant variable moves nothing") {
  FeatureSet fs = toy_features(60, {2 * kMarxColumns}, 4);
  for (int col = kMarxColumns; col < 2 * kMarxColumns; ++col) {
    fs.hemispheres[0].values.col(col).setConstant(0.37);
  }
  Rng rng(5);
  HnnModel model = make_model(tiny_arch(Variant::Factorized), fs, rng);
  const Ensemble ensemble = wrap_single(model, fs.est_rows);
  VIOptions options;
  options.reps = 20;
  options.oob_only = false;
  Rng vi_rng(6);
  CHECK(variable_importance(ensemble, fs, "state0", "x1", options, vi_rng) == 0.0);
}

TEST_CASE("importance is invariant to relabeling other variables") {
  FeatureSet fs = toy_features(60, {3 * kMarxColumns}, 7);
  Rng rng(8);
  HnnModel model = make_model(tiny_arch(Variant::Factorized), fs, rng);
  const Ensemble ensemble = wrap_single(model, fs.est_rows);
  VIOptions options;
  options.reps = 50;
  options.oob_only = false;
  Rng a(9);
  const double before = variable_importance(ensemble, fs, "state0", "x0", options, a);

  // swap the names (not the data) of x1 and x2
  FeatureSet relabeled = fs;
  for (auto& v : relabeled.hemispheres[0].feature_variable) {
    if (v == "x1") v = "x2";
    else if (v == "x2") v = "x1";
  }
  Rng b(9);
  const double after = variable_importance(ensemble, relabeled, "state0", "x0", options, b);
  CHECK(before == after);
}

TEST_CASE("the planted driver ranks first across seeds") {
  int wins = 0;
  const int trials = 8;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t seed = 1000 + 17 * static_cast<std::uint64_t>(trial);
    FeatureSet fs = planted_driver(200, 10, seed);
    ArchitectureConfig arch = tiny_arch(Variant::Factorized);
    arch.state_width = 32;
    const Ensemble ensemble = train_ensemble(arch, fs, quick_config(500, 3, seed));
    VIOptions options;
    options.reps = 16;
    Rng rng(seed + 7);
    const VIReport report = variable_importance_report(ensemble, fs, "state0", options, rng);
    if (report.ranking.front().variable == "x0") ++wins;
  }
  CHECK(wins == trials);  // the full 100-seed version runs in the acceptance suite
}

TEST_CASE("joint shuffling keeps a variable's columns aligned") {
  // With joint shuffling, lag0 and lag1 columns of the shuffled variable stay
  // pairwise consistent; verify by shuffling a hemisphere whose two columns
  // are identical and checking the recomputed component still matches a
  // single-column shuffle (they remain equal columns).
  FeatureSet fs = toy_features(50, {kMarxColumns}, 10);
  for (int c = 1; c < kMarxColumns; ++c) fs.hemispheres[0].values.col(c) = fs.hemispheres[0].values.col(0);
  Rng rng(11);
  HnnModel model = make_model(tiny_arch(Variant::Factorized), fs, rng);
  const Ensemble ensemble = wrap_single(model, fs.est_rows);
  VIOptions joint;
  joint.reps = 5;
  joint.oob_only = false;
  joint.joint_shuffle = true;
  Rng r1(12);
  const double vi_joint = variable_importance(ensemble, fs, "state0", "x0", joint, r1);
  CHECK(std::isfinite(vi_joint));
  VIOptions independent = joint;
  independent.joint_shuffle = false;
  Rng r2(12);
  const double vi_indep = variable_importance(ensemble, fs, "state0", "x0", independent, r2);
  // independent shuffling breaks the within-variable coherence, moving more
  CHECK(vi_indep >= vi_joint * 0.5);
}

TEST_CASE("zero-variance components are rejected") {
  FeatureSet fs = toy_features(50, {kMarxColumns}, 13);
  Rng rng(14);
  HnnModel model = make_model(tiny_arch(Variant::Factorized), fs, rng);
  for (auto& layer : model.coef_nets[0].layers) {
    layer.weights.setZero();
    layer.bias.setZero();
  }
  const Ensemble ensemble = wrap_single(model, fs.est_rows);
  VIOptions options;
  options.oob_only = false;
  Rng vi_rng(15);
  CHECK_THROWS_AS(variable_importance(ensemble, fs, "state0", "x0", options, vi_rng),
                  NumericalError);
}

TEST_CASE("contribution shares") {
  Matrix components(3, 3);
  components << 2, 0, 0, 1, 1, 1, -2, 1, 1;
  const Matrix shares = contribution_shares(components);
  CHECK(shares(0, 0) == 1.0);
  CHECK(shares(0, 1) == 0.0);
  CHECK(shares(1, 0) == doctest::Approx(1.0 / 3));
  CHECK(shares(2, 0) == doctest::Approx(0.5));  // absolute value
  for (Eigen::Index t = 0; t < 3; ++t) CHECK(shares.row(t).sum() == doctest::Approx(1.0));
  CHECK((shares.array() >= 0.0).all());

  Matrix with_zero_row(2, 2);
  with_zero_row << 1, 1, 0, 0;
  CHECK_THROWS_AS(contribution_shares(with_zero_row), NumericalError);
}

TEST_CASE("shares match the direct formula on random paths") {
  Rng rng(16);
  Matrix components(40, 4);
  for (Eigen::Index t = 0; t < 40; ++t) {
    for (Eigen::Index j = 0; j < 4; ++j) components(t, j) = rng.normal();
  }
  const Matrix shares = contribution_shares(components);
  for (Eigen::Index t = 0; t < 40; ++t) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) denom += std::abs(components(t, j));
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(shares(t, j) == doctest::Approx(std::abs(components(t, j)) / denom).epsilon(1e-12));
    }
  }
}

TEST_CASE("two perfectly correlated columns load on one factor") {
  Rng rng(17);
  Matrix x(80, 2);
  for (int t = 0; t < 80; ++t) {
    const double f = rng.normal();
    x(t, 0) = f;
    x(t, 1) = 2.0 * f;
  }
  const PcaResult result = pca_extract(x);
  CHECK(result.explained_variance == doctest::Approx(1.0).epsilon(1e-10));
  const double corr = correlation(result.scores, x.col(0));
  CHECK(std::abs(corr) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("independent noise spreads variance over 1/p per component") {
  Rng rng(18);
  const int p = 8, T = 20000;
  Matrix x(T, p);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < p; ++j) x(t, j) = rng.normal();
  }
  const PcaResult result = pca_extract(x);
  CHECK(result.explained_variance == doctest::Approx(1.0 / p).epsilon(0.10));
}

TEST_CASE("uniform weights reproduce the plain extraction exactly") {
  Rng rng(19);
  Matrix x(60, 5);
  for (int t = 0; t < 60; ++t) {
    for (int j = 0; j < 5; ++j) x(t, j) = rng.normal();
  }
  const PcaResult plain = pca_extract(x);
  const PcaResult weighted = pca_extract(x, Vector::Constant(5, 3.7));
  CHECK(plain.scores == weighted.scores);
  CHECK(plain.loadings == weighted.loadings);
}

TEST_CASE("the sign is fixed against a reference series") {
  Rng rng(20);
  Matrix x(60, 3);
  for (int t = 0; t < 60; ++t) {
    const double f = rng.normal();
    for (int j = 0; j < 3; ++j) x(t, j) = f + 0.1 * rng.normal();
  }
  const PcaResult plain = pca_extract(x);
  const PcaResult flipped = pca_extract(x, Vector(), Vector(-plain.scores));
  CHECK(correlation(flipped.scores, plain.scores) < 0.0);
  CHECK(correlation(flipped.scores, Vector(-plain.scores)) > 0.0);
}

TEST_CASE("degenerate extraction inputs are rejected") {
  CHECK_THROWS_AS(pca_extract(Matrix::Zero(1, 3)), NumericalError);
  CHECK_THROWS_AS(pca_extract(Matrix::Zero(30, 3)), NumericalError);  // no variance
  Rng rng(21);
  Matrix x(30, 2);
  for (int t = 0; t < 30; ++t) {
    x(t, 0) = rng.normal();
    x(t, 1) = rng.normal();
  }
  CHECK_THROWS_AS(pca_extract(x, Vector::Zero(2)), ConfigError);   // all-zero weights
  CHECK_THROWS_AS(pca_extract(x, Vector::Ones(3)), ConfigError);   // wrong length
}
