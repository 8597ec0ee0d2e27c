#pragma once

#include "hnn/types.hpp"

#include <map>
#include <optional>

namespace hnn {

/// Quarterly multivariate panel in the FRED-QD layout: a shared date index,
/// one raw series per mnemonic and one stationarity transform code per
/// mnemonic. Interior NaNs are rejected at load; head/tail NaNs are kept and
/// tracked per series.
struct RawPanel {
  std::vector<Quarter> dates;
  std::vector<std::string> mnemonics;
  std::map<std::string, Vector> columns;  // length dates.size(), NaN only at head/tail
  std::map<std::string, int> tcodes;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(dates.size()); }
  bool has(const std::string& mnemonic) const { return columns.count(mnemonic) > 0; }
  const Vector& column(const std::string& mnemonic) const;
  int tcode(const std::string& mnemonic) const;

  /// First/last row where the series is observed.
  std::pair<Eigen::Index, Eigen::Index> observed_range(const std::string& mnemonic) const;

  Eigen::Index index_of(Quarter date) const;

  void validate() const;
};

/// Reads a CSV with mnemonics in the first row, transform codes in the
/// second, and quarterly dates in the first column.
RawPanel load_panel_csv(const std::string& path);

void save_panel_csv(const RawPanel& panel, const std::string& path);

}  // namespace hnn
