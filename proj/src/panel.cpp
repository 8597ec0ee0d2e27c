#include "hnn/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and stray quotes
    const auto is_junk = [](unsigned char c) { return std::isspace(c) || c == '"'; };
    while (!cell.empty() && is_junk(cell.front())) cell.erase(cell.begin());
    while (!cell.empty() && is_junk(cell.back())) cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_cell(const std::string& cell, double* out) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".") {
    *out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  try {
    size_t pos = 0;
    *out = std::stod(cell, &pos);
    return pos == cell.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

const Vector& RawPanel::column(const std::string& mnemonic) const {
  auto it = columns.find(mnemonic);
  if (it == columns.end()) throw DataError("unknown mnemonic: '" + mnemonic + "'");
  return it->second;
}

int RawPanel::tcode(const std::string& mnemonic) const {
  auto it = tcodes.find(mnemonic);
  if (it == tcodes.end()) throw DataError("no transform code for mnemonic: '" + mnemonic + "'");
  return it->second;
}

std::pair<Eigen::Index, Eigen::Index> RawPanel::observed_range(const std::string& mnemonic) const {
  const Vector& x = column(mnemonic);
  Eigen::Index first = 0;
  Eigen::Index last = x.size() - 1;
  while (first <= last && std::isnan(x[first])) ++first;
  while (last >= first && std::isnan(x[last])) --last;
  if (first > last) throw DataError("series '" + mnemonic + "' has no observed values");
  return {first, last};
}

Eigen::Index RawPanel::index_of(Quarter date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) {
    throw DataError("date " + date.str() + " not in panel range " + dates.front().str() + ".." +
                    dates.back().str());
  }
  return static_cast<Eigen::Index>(it - dates.begin());
}

void RawPanel::validate() const {
  if (dates.empty()) throw DataError("panel has no rows");
  for (size_t i = 1; i < dates.size(); ++i) {
    if (dates[i] - dates[i - 1] != 1) {
      throw DataError("date index not consecutive quarters at " + dates[i].str());
    }
  }
  for (const auto& name : mnemonics) {
    const Vector& x = column(name);
    if (x.size() != rows()) throw DataError("series '" + name + "' length mismatch");
    auto [first, last] = observed_range(name);
    for (Eigen::Index t = first; t <= last; ++t) {
      if (std::isnan(x[t])) {
        throw DataError("interior missing value in series '" + name + "' at " + dates[static_cast<size_t>(t)].str());
      }
    }
    tcode(name);
  }
}

RawPanel load_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty data file: " + path);
  auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError("header row needs a date column plus mnemonics");

  if (!std::getline(in, line)) throw DataError("missing transform-code row");
  auto tcode_row = split_csv_line(line);
  if (tcode_row.size() != header.size()) throw DataError("transform-code row width mismatch");

  RawPanel panel;
  const size_t ncols = header.size() - 1;
  panel.mnemonics.assign(header.begin() + 1, header.end());
  for (size_t j = 0; j < ncols; ++j) {
    double code = 0;
    if (!parse_cell(tcode_row[j + 1], &code) || std::isnan(code)) {
      throw DataError("bad transform code for '" + panel.mnemonics[j] + "'");
    }
    panel.tcodes[panel.mnemonics[j]] = static_cast<int>(code);
  }

  std::vector<std::vector<double>> cols(ncols);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(", \t\r\n") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row width mismatch at line with date '" + (cells.empty() ? "" : cells[0]) + "'");
    }
    panel.dates.push_back(Quarter::parse(cells[0]));
    for (size_t j = 0; j < ncols; ++j) {
      double v = 0;
      if (!parse_cell(cells[j + 1], &v)) {
        throw DataError("bad numeric cell for '" + panel.mnemonics[j] + "' at " +
                        panel.dates.back().str());
      }
      cols[j].push_back(v);
    }
  }

  for (size_t j = 0; j < ncols; ++j) {
    panel.columns[panel.mnemonics[j]] =
        Eigen::Map<const Vector>(cols[j].data(), static_cast<Eigen::Index>(cols[j].size()));
  }
  panel.validate();
  return panel;
}

void save_panel_csv(const RawPanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write data file: " + path);
  out << "date";
  for (const auto& m : panel.mnemonics) out << ',' << m;
  out << "\ntcode";
  for (const auto& m : panel.mnemonics) out << ',' << panel.tcode(m);
  out << '\n';
  out.precision(12);
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    out << panel.dates[static_cast<size_t>(t)].str();
    for (const auto& m : panel.mnemonics) {
      const double v = panel.column(m)[t];
      out << ',';
      if (!std::isnan(v)) out << v;
    }
    out << '\n';
  }
}

}  // namespace hnn
