#include "hnn/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hnn {

namespace {

/// Rows a draw may be scored on.
std::vector<int> evaluation_rows(const EnsembleMember& member, Eigen::Index est_rows,
                                 bool oob_only) {
  if (oob_only) return member.allocation.holdout_rows;
  std::vector<int> rows;
  for (Eigen::Index t = 0; t < est_rows; ++t) rows.push_back(static_cast<int>(t));
  return rows;
}

/// Component of hemisphere h for one member, recomputed with the
/// hemisphere's input block replaced by `block`.
Vector recompute_component(const HnnModel& model, const FeatureSet& features, int hemi_index,
                           const Matrix& block, const Vector& trend_rows) {
  const FeatureMatrix& fm = features.hemispheres[static_cast<size_t>(hemi_index)];
  if (model.arch.variant == Variant::Additive) {
    int net_i = -1;
    for (size_t c = 0; c < model.component_indices.size(); ++c) {
      if (model.component_indices[c] == hemi_index) net_i = static_cast<int>(c);
    }
    if (net_i < 0) throw ConfigError("hemisphere has no component net");
    Matrix input(block.rows(), block.cols() + (fm.spec.include_trend ? 1 : 0));
    input.leftCols(block.cols()) = block;
    if (fm.spec.include_trend) input.col(block.cols()) = trend_rows;
    return forward(model.nets[static_cast<size_t>(net_i)], input, Mode::Eval);
  }
  int state_j = -1;
  for (size_t j = 0; j < model.state_indices.size(); ++j) {
    if (model.state_indices[j] == hemi_index) state_j = static_cast<int>(j);
  }
  if (state_j < 0) throw ConfigError("variable importance needs a state hemisphere");
  const Vector state = forward(model.nets[static_cast<size_t>(state_j)], block, Mode::Eval);
  Matrix trend_input(trend_rows.size(), 1);
  trend_input.col(0) = trend_rows;
  const Vector coef = forward(model.coef_nets[static_cast<size_t>(state_j)], trend_input, Mode::Eval);
  return state.array() * coef.array();
}

}  // namespace

double variable_importance(const Ensemble& ensemble, const FeatureSet& features,
                           const std::string& hemisphere, const std::string& variable,
                           const VIOptions& options, Rng& rng) {
  if (options.reps < 1) throw ConfigError("variable importance needs reps >= 1");
  const int hemi_index = features.hemisphere_index(hemisphere);
  const FeatureMatrix& fm = features.hemispheres[static_cast<size_t>(hemi_index)];
  const std::vector<int> var_cols = fm.variable_columns(variable);

  double acc = 0.0;
  int terms = 0;
  for (size_t b = 0; b < ensemble.members.size(); ++b) {
    const HnnModel& model = ensemble.members[b].fit.model;
    const std::vector<int> rows = evaluation_rows(ensemble.members[b], ensemble.est_rows,
                                                  options.oob_only);
    if (rows.size() < 2) continue;

    Matrix block(static_cast<Eigen::Index>(rows.size()), fm.cols());
    Vector trend_rows(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      block.row(static_cast<Eigen::Index>(r)) = fm.values.row(rows[r]);
      trend_rows[static_cast<Eigen::Index>(r)] = features.trend[rows[r]];
    }
    const Vector base = recompute_component(model, features, hemi_index, block, trend_rows);
    const double base_var = variance(base);
    if (!(base_var > 0.0)) throw NumericalError("zero-variance component for '" + hemisphere + "'");

    for (int rep = 0; rep < options.reps; ++rep) {
      Matrix shuffled = block;
      if (options.joint_shuffle) {
        const std::vector<int> perm = rng.permutation(static_cast<int>(rows.size()));
        for (int col : var_cols) {
          for (size_t r = 0; r < rows.size(); ++r) {
            shuffled(static_cast<Eigen::Index>(r), col) = block(perm[r], col);
          }
        }
      } else {
        for (int col : var_cols) {
          const std::vector<int> perm = rng.permutation(static_cast<int>(rows.size()));
          for (size_t r = 0; r < rows.size(); ++r) {
            shuffled(static_cast<Eigen::Index>(r), col) = block(perm[r], col);
          }
        }
      }
      const Vector moved = recompute_component(model, features, hemi_index, shuffled, trend_rows);
      acc += (moved - base).squaredNorm() / static_cast<double>(rows.size()) / base_var;
      ++terms;
    }
  }
  if (terms == 0) throw NumericalError("no out-of-bag rows available for variable importance");
  return 100.0 * acc / static_cast<double>(terms);
}

VIReport variable_importance_report(const Ensemble& ensemble, const FeatureSet& features,
                                    const std::string& hemisphere, const VIOptions& options,
                                    Rng& rng) {
  VIReport report;
  report.hemisphere = hemisphere;
  report.reps = options.reps;
  const FeatureMatrix& fm = features.hemisphere(hemisphere);
  for (const auto& variable : fm.variables()) {
    report.ranking.push_back({variable, variable_importance(ensemble, features, hemisphere,
                                                            variable, options, rng)});
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const VIEntry& a, const VIEntry& b) { return a.vi > b.vi; });
  return report;
}

Matrix contribution_shares(const Matrix& components) {
  Matrix shares(components.rows(), components.cols());
  for (Eigen::Index t = 0; t < components.rows(); ++t) {
    const double total = components.row(t).cwiseAbs().sum();
    if (!(total > 0.0)) {
      throw NumericalError("all components are zero at row " + std::to_string(t));
    }
    shares.row(t) = components.row(t).cwiseAbs() / total;
  }
  return shares;
}

PcaResult pca_extract(const Matrix& features, const Vector& weights, const Vector& sign_reference) {
  if (features.rows() < 2 || features.cols() < 1) {
    throw NumericalError("feature block too small for principal component extraction");
  }
  Matrix X = features;
  X.rowwise() -= features.colwise().mean();
  if (weights.size() > 0) {
    if (weights.size() != X.cols()) throw ConfigError("one weight per column required");
    if ((weights.array() < 0.0).any()) throw ConfigError("weights must be non-negative");
    const double mean = weights.mean();
    if (!(mean > 0.0)) throw ConfigError("weights must not all be zero");
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) *= weights[j] / mean;
  }

  const Matrix cov = X.transpose() * X / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const double total = solver.eigenvalues().sum();
  if (!(total > 0.0)) throw NumericalError("feature block has no variance");

  PcaResult out;
  const Eigen::Index top = cov.cols() - 1;  // eigenvalues ascending
  out.loadings = solver.eigenvectors().col(top);
  out.explained_variance = solver.eigenvalues()[top] / total;
  out.scores = X * out.loadings;

  bool flip = false;
  if (sign_reference.size() > 0) {
    if (sign_reference.size() != out.scores.size()) throw ConfigError("sign reference length mismatch");
    flip = correlation(out.scores, sign_reference) < 0.0;
  } else {
    Eigen::Index at = 0;
    out.loadings.cwiseAbs().maxCoeff(&at);
    flip = out.loadings[at] < 0.0;
  }
  if (flip) {
    out.loadings = -out.loadings;
    out.scores = -out.scores;
  }
  return out;
}

}  // namespace hnn
