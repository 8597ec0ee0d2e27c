#include "hnn/stats.hpp"

#include <cmath>

namespace hnn {

double nan_mean(const Vector& values) {
  double acc = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::isfinite(values[i])) {
      acc += values[i];
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : acc / static_cast<double>(n);
}

double variance(const Vector& values) {
  if (values.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / static_cast<double>(values.size());
}

double std_dev(const Vector& values) { return std::sqrt(variance(values)); }

double correlation(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) throw NumericalError("correlation needs matched series");
  const double ma = a.mean();
  const double mb = b.mean();
  const auto da = a.array() - ma;
  const auto db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) throw NumericalError("correlation undefined for constant series");
  return (da * db).sum() / denom;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw NumericalError("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) throw NumericalError("cosine similarity undefined for zero vector");
  return a.dot(b) / denom;
}

}  // namespace hnn
