#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace hnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Configuration / schema problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure such as divergence or singular systems (CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Calendar quarter. Ordered, supports quarter arithmetic.
struct Quarter {
  int year = 1900;
  int q = 1;  // 1..4

  Quarter() = default;
  Quarter(int year_, int q_);

  int index() const { return year * 4 + (q - 1); }
  static Quarter from_index(int idx);

  Quarter operator+(int quarters) const { return from_index(index() + quarters); }
  Quarter operator-(int quarters) const { return from_index(index() - quarters); }
  int operator-(const Quarter& other) const { return index() - other.index(); }

  auto operator<=>(const Quarter&) const = default;

  std::string str() const;

  /// Accepts "1959Q1", "1959-03-01" (month mapped to quarter) and "3/1/1959".
  static Quarter parse(const std::string& text);
};

std::vector<Quarter> quarter_range(Quarter first, int count);

}  // namespace hnn
