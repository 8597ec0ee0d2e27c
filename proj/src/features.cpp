#include "hnn/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hnn {

void TargetSpec::validate() const {
  if (horizon < 1) throw ConfigError("target horizon must be >= 1");
  if (aggregation == TargetAggregation::MeanOverHorizon && horizon <= 1) {
    throw ConfigError("mean-over-horizon target requires horizon > 1");
  }
  if (!(scale != 0.0) || !std::isfinite(scale)) throw ConfigError("target scale must be non-zero");
}

std::vector<int> FeatureMatrix::variable_columns(const std::string& mnemonic) const {
  std::vector<int> out;
  for (size_t j = 0; j < feature_variable.size(); ++j) {
    if (feature_variable[j] == mnemonic) out.push_back(static_cast<int>(j));
  }
  if (out.empty()) {
    throw DataError("variable '" + mnemonic + "' not in hemisphere '" + spec.name + "'");
  }
  return out;
}

std::vector<std::string> FeatureMatrix::variables() const {
  std::vector<std::string> out;
  for (const auto& v : feature_variable) {
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

int FeatureSet::hemisphere_index(const std::string& name) const {
  for (size_t i = 0; i < hemispheres.size(); ++i) {
    if (hemispheres[i].spec.name == name) return static_cast<int>(i);
  }
  throw ConfigError("unknown hemisphere: '" + name + "'");
}

const FeatureMatrix& FeatureSet::hemisphere(const std::string& name) const {
  return hemispheres[static_cast<size_t>(hemisphere_index(name))];
}

namespace {

struct AlignedSeries {
  Vector values;             // aligned to panel rows, NaN where undefined
  Eigen::Index first = 0;    // first defined panel row
  Eigen::Index last = 0;     // last defined panel row
};

AlignedSeries transform_aligned(const RawPanel& panel, const std::string& mnemonic, int tcode) {
  auto [obs_first, obs_last] = panel.observed_range(mnemonic);
  const Vector& raw = panel.column(mnemonic);
  const Vector observed = raw.segment(obs_first, obs_last - obs_first + 1);
  const Vector transformed = apply_tcode(observed, tcode, mnemonic);
  const int drop = tcode_head_drop(tcode);

  AlignedSeries out;
  out.values = Vector::Constant(panel.rows(), std::numeric_limits<double>::quiet_NaN());
  out.first = obs_first + drop;
  out.last = obs_last;
  out.values.segment(out.first, transformed.size()) = transformed;
  return out;
}

int effective_tcode(const RawPanel& panel, const std::string& mnemonic, const BuildOptions& options) {
  auto it = options.tcode_overrides.find(mnemonic);
  if (it != options.tcode_overrides.end()) return it->second;
  return panel.tcode(mnemonic);
}

}  // namespace

Vector target_series(const RawPanel& panel, const TargetSpec& target) {
  target.validate();
  const int tcode = target.tcode_override ? *target.tcode_override : panel.tcode(target.mnemonic);
  return target.scale * transform_aligned(panel, target.mnemonic, tcode).values;
}

Vector transformed_series(const RawPanel& panel, const std::string& mnemonic,
                          std::optional<int> tcode_override) {
  const int tcode = tcode_override ? *tcode_override : panel.tcode(mnemonic);
  return transform_aligned(panel, mnemonic, tcode).values;
}

FeatureSet build_features(const RawPanel& panel, const std::vector<HemisphereSpec>& specs,
                          const TargetSpec& target, Quarter train_end,
                          const BuildOptions& options) {
  target.validate();
  if (specs.empty()) throw ConfigError("at least one hemisphere is required");

  std::set<std::string> seen_state;
  for (const auto& spec : specs) {
    if (spec.role == HemisphereRole::Coefficient && !spec.mnemonics.empty()) {
      throw ConfigError("coefficient hemisphere '" + spec.name + "' may only carry the trend");
    }
    if (spec.role == HemisphereRole::State && spec.mnemonics.empty()) {
      throw ConfigError("state hemisphere '" + spec.name + "' has no variables");
    }
    if (spec.role == HemisphereRole::State && !options.allow_overlap) {
      for (const auto& m : spec.mnemonics) {
        if (!seen_state.insert(m).second) {
          throw ConfigError("mnemonic '" + m + "' appears in two state hemispheres");
        }
      }
    }
  }

  const Vector pi = target_series(panel, target);
  const int marx_drop = marx_head_drop(options.lag_base);

  // Transform every referenced series once and find the common defined range.
  std::map<std::string, AlignedSeries> aligned;
  Eigen::Index start = 0;
  Eigen::Index end = panel.rows() - 1;
  for (const auto& spec : specs) {
    for (const auto& m : spec.mnemonics) {
      if (aligned.count(m)) continue;
      AlignedSeries s;
      if (m == kTargetMnemonic) {
        s.values = pi;
        s.first = 0;
        while (s.first < pi.size() && std::isnan(pi[s.first])) ++s.first;
        s.last = pi.size() - 1;
        while (s.last > s.first && std::isnan(pi[s.last])) --s.last;
      } else {
        s = transform_aligned(panel, m, effective_tcode(panel, m, options));
      }
      start = std::max(start, s.first + marx_drop);
      end = std::min(end, s.last);
      aligned.emplace(m, std::move(s));
    }
  }
  if (options.sample_start) {
    const Eigen::Index requested = panel.index_of(*options.sample_start);
    start = std::max(start, requested);
  }
  if (end <= start) throw DataError("no overlapping sample after transforms and lag history");

  const Eigen::Index rows = end - start + 1;
  const Eigen::Index train_end_row = panel.index_of(train_end);
  if (train_end_row < start) throw DataError("train_end predates the first assembled row");

  FeatureSet out;
  out.train_end = train_end;
  out.dates.assign(panel.dates.begin() + start, panel.dates.begin() + end + 1);

  // Horizon-aggregated target aligned to assembled rows.
  out.target = Vector::Constant(rows, std::numeric_limits<double>::quiet_NaN());
  const int s = target.horizon;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = start + r;
    if (target.aggregation == TargetAggregation::OneStep) {
      if (t + s < panel.rows() && !std::isnan(pi[t + s])) out.target[r] = pi[t + s];
    } else {
      double acc = 0.0;
      bool ok = t + s < panel.rows();
      for (int k = 1; ok && k <= s; ++k) {
        const double v = pi[t + k];
        if (std::isnan(v)) ok = false;
        else acc += v;
      }
      if (ok) out.target[r] = target.horizon_sum ? acc : acc / s;
    }
  }

  // Estimation rows: a prefix whose target realizations are all observed by
  // train_end (a one-step target at train_end uses the value one quarter
  // later, which the estimator must not see).
  Eigen::Index est = 0;
  while (est < rows && start + est + s <= train_end_row && !std::isnan(out.target[est])) ++est;
  if (est < 16) throw DataError("estimation sample too short (" + std::to_string(est) + " rows)");
  out.est_rows = est;

  // Trend: 0..1 over the estimation sample, linear beyond it.
  out.trend = Vector(rows);
  for (Eigen::Index r = 0; r < rows; ++r) out.trend[r] = static_cast<double>(r) / static_cast<double>(est - 1);

  for (const auto& spec : specs) {
    FeatureMatrix fm;
    fm.spec = spec;
    const Eigen::Index ncols = static_cast<Eigen::Index>(spec.mnemonics.size()) * kMarxColumns;
    fm.values = Matrix(rows, ncols);
    fm.scale_mean = Vector(ncols);
    fm.scale_std = Vector(ncols);
    Eigen::Index col = 0;
    for (const auto& m : spec.mnemonics) {
      const AlignedSeries& s = aligned.at(m);
      // marx rows r correspond to panel rows s.first + marx_drop + r
      const Matrix block = marx_expand(s.values.segment(s.first, s.last - s.first + 1), options.lag_base);
      const Eigen::Index block_offset = start - (s.first + marx_drop);
      for (int k = 0; k < kMarxColumns; ++k) {
        fm.values.col(col + k) = block.col(k).segment(block_offset, rows);
        fm.feature_names.push_back(m + "." + marx_kind_name(static_cast<MarxKind>(k)));
        fm.feature_variable.push_back(m);
      }
      col += kMarxColumns;
    }
    fm.card = static_cast<double>(ncols);
    // Standardize on the estimation range, then shrink by sqrt(card) so the
    // hemisphere's a-priori component variance is 1 regardless of its size.
    const double divisor = std::sqrt(std::max(fm.card, 1.0));
    for (Eigen::Index j = 0; j < ncols; ++j) {
      const auto train_view = fm.values.col(j).head(est);
      const double mean = train_view.mean();
      const double var = (train_view.array() - mean).square().sum() / static_cast<double>(est);
      const double sd = std::sqrt(var);
      if (!(sd > 0.0)) {
        throw DataError("zero-variance feature '" + fm.feature_names[static_cast<size_t>(j)] +
                        "' on the training range");
      }
      fm.scale_mean[j] = mean;
      fm.scale_std[j] = sd;
      fm.values.col(j) = (fm.values.col(j).array() - mean) / (sd * divisor);
    }
    if (spec.role == HemisphereRole::State && fm.cols() == 0) {
      throw DataError("hemisphere '" + spec.name + "' is empty after dropping short series");
    }
    out.hemispheres.push_back(std::move(fm));
  }
  return out;
}

}  // namespace hnn
