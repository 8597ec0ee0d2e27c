#pragma once

#include "hnn/types.hpp"

namespace hnn {

/// Mean of the finite entries; NaN when none.
double nan_mean(const Vector& values);

/// Population standard deviation (divides by n).
double std_dev(const Vector& values);

double variance(const Vector& values);

/// Pearson correlation.
double correlation(const Vector& a, const Vector& b);

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty; p in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double p);

double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace hnn
