#pragma once

#include "hnn/types.hpp"

namespace hnn {

/// Number of leading observations consumed by a FRED-QD transform code.
int tcode_head_drop(int tcode);

/// Applies a FRED-QD stationarity transform (codes 1-7). The returned series
/// is shorter than the input by tcode_head_drop(tcode); element i of the
/// result corresponds to input element i + drop.
///
///   1: x              2: dx           3: d2x        4: log(x)
///   5: dlog(x)        6: d2log(x)     7: d(x_t/x_{t-1} - 1)
///
/// Log transforms require strictly positive inputs; violations throw a
/// DataError naming `name` when provided.
Vector apply_tcode(const Vector& series, int tcode, const std::string& name = "");

/// Reconstructs the original series from a transformed one. `head` must hold
/// the first tcode_head_drop(tcode) values of the original series.
Vector invert_tcode(const Vector& transformed, int tcode, const Vector& head);

/// Feature kinds produced by marx_expand, in column order.
enum class MarxKind { Lag0, Lag1, Lag2, Lag3, Ma2, Ma4, Ma8 };
constexpr int kMarxColumns = 7;
std::string marx_kind_name(MarxKind kind);

/// Expands a series into 4 lags and moving averages of order 2, 4 and 8, all
/// aligned so that row t uses information up to and including x_t. With
/// `lag_base` = 1 the lag block becomes lags 1..4 instead of 0..3. The first
/// rows with insufficient history are dropped: row i of the result
/// corresponds to input index i + marx_head_drop(lag_base).
Matrix marx_expand(const Vector& series, int lag_base = 0);

int marx_head_drop(int lag_base = 0);

}  // namespace hnn
