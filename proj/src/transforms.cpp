#include "hnn/transforms.hpp"

#include <cmath>

namespace hnn {

namespace {

void require_positive(const Vector& series, const std::string& name) {
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    if (!(series[i] > 0.0)) {
      throw DataError("log transform on non-positive value" +
                      (name.empty() ? std::string() : " in series '" + name + "'") +
                      " at position " + std::to_string(i));
    }
  }
}

Vector diff(const Vector& x) { return x.tail(x.size() - 1) - x.head(x.size() - 1); }

}  // namespace

int tcode_head_drop(int tcode) {
  switch (tcode) {
    case 1:
    case 4:
      return 0;
    case 2:
    case 5:
      return 1;
    case 3:
    case 6:
    case 7:
      return 2;
    default:
      throw DataError("unknown transform code: " + std::to_string(tcode));
  }
}

Vector apply_tcode(const Vector& series, int tcode, const std::string& name) {
  const int drop = tcode_head_drop(tcode);
  if (series.size() <= drop) {
    throw DataError("series too short for transform code " + std::to_string(tcode) +
                    (name.empty() ? std::string() : " ('" + name + "')"));
  }
  switch (tcode) {
    case 1:
      return series;
    case 2:
      return diff(series);
    case 3:
      return diff(diff(series));
    case 4:
      require_positive(series, name);
      return series.array().log();
    case 5:
      require_positive(series, name);
      return diff(series.array().log().matrix());
    case 6:
      require_positive(series, name);
      return diff(diff(series.array().log().matrix()));
    case 7: {
      // growth-rate acceleration: d(x_t / x_{t-1} - 1)
      Vector growth(series.size() - 1);
      for (Eigen::Index t = 1; t < series.size(); ++t) {
        if (series[t - 1] == 0.0) {
          throw DataError("zero value prevents growth-rate transform" +
                          (name.empty() ? std::string() : " in series '" + name + "'"));
        }
        growth[t - 1] = series[t] / series[t - 1] - 1.0;
      }
      return diff(growth);
    }
    default:
      throw DataError("unknown transform code: " + std::to_string(tcode));
  }
}

Vector invert_tcode(const Vector& transformed, int tcode, const Vector& head) {
  const int drop = tcode_head_drop(tcode);
  if (head.size() != drop) {
    throw DataError("inverse transform needs " + std::to_string(drop) + " head values");
  }
  const Eigen::Index n = transformed.size() + drop;
  Vector out(n);
  out.head(drop) = head;
  switch (tcode) {
    case 1:
      return transformed;
    case 2:
      for (Eigen::Index t = 1; t < n; ++t) out[t] = out[t - 1] + transformed[t - 1];
      return out;
    case 3:
      for (Eigen::Index t = 2; t < n; ++t)
        out[t] = 2.0 * out[t - 1] - out[t - 2] + transformed[t - 2];
      return out;
    case 4:
      return transformed.array().exp();
    case 5:
      for (Eigen::Index t = 1; t < n; ++t) out[t] = out[t - 1] * std::exp(transformed[t - 1]);
      return out;
    case 6:
      for (Eigen::Index t = 2; t < n; ++t) {
        const double log_t = 2.0 * std::log(out[t - 1]) - std::log(out[t - 2]) + transformed[t - 2];
        out[t] = std::exp(log_t);
      }
      return out;
    case 7: {
      double prev_growth = head[1] / head[0] - 1.0;
      for (Eigen::Index t = 2; t < n; ++t) {
        const double growth = prev_growth + transformed[t - 2];
        out[t] = out[t - 1] * (1.0 + growth);
        prev_growth = growth;
      }
      return out;
    }
    default:
      throw DataError("unknown transform code: " + std::to_string(tcode));
  }
}

std::string marx_kind_name(MarxKind kind) {
  switch (kind) {
    case MarxKind::Lag0: return "lag0";
    case MarxKind::Lag1: return "lag1";
    case MarxKind::Lag2: return "lag2";
    case MarxKind::Lag3: return "lag3";
    case MarxKind::Ma2: return "ma2";
    case MarxKind::Ma4: return "ma4";
    case MarxKind::Ma8: return "ma8";
  }
  return "?";
}

int marx_head_drop(int lag_base) { return std::max(lag_base + 3, 7); }

Matrix marx_expand(const Vector& series, int lag_base) {
  if (lag_base != 0 && lag_base != 1) throw DataError("lag_base must be 0 or 1");
  const int drop = marx_head_drop(lag_base);
  if (series.size() <= drop + 1) {
    throw DataError("series too short for lag/moving-average expansion");
  }
  const Eigen::Index rows = series.size() - drop;
  Matrix out(rows, kMarxColumns);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + drop;
    for (int l = 0; l < 4; ++l) out(r, l) = series[t - (lag_base + l)];
    out(r, 4) = series.segment(t - 1, 2).mean();
    out(r, 5) = series.segment(t - 3, 4).mean();
    out(r, 6) = series.segment(t - 7, 8).mean();
  }
  return out;
}

}  // namespace hnn
