#include "hnn/types.hpp"

#include <cctype>
#include <cstdio>

namespace hnn {

Quarter::Quarter(int year_, int q_) : year(year_), q(q_) {
  if (q < 1 || q > 4) throw DataError("quarter out of range: " + std::to_string(q_));
}

Quarter Quarter::from_index(int idx) {
  Quarter out;
  out.year = idx / 4;
  out.q = idx % 4 + 1;
  if (out.q < 1) {  // negative index wrap, not expected in practice
    out.year -= 1;
    out.q += 4;
  }
  return out;
}

std::string Quarter::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04dQ%d", year, q);
  return buf;
}

namespace {

int month_to_quarter(int month) {
  if (month < 1 || month > 12) throw DataError("month out of range: " + std::to_string(month));
  return (month - 1) / 3 + 1;
}

}  // namespace

Quarter Quarter::parse(const std::string& text) {
  int a = 0, b = 0, c = 0;
  if (std::sscanf(text.c_str(), "%dQ%d", &a, &b) == 2 ||
      std::sscanf(text.c_str(), "%dq%d", &a, &b) == 2) {
    return Quarter(a, b);
  }
  if (std::sscanf(text.c_str(), "%d-%d-%d", &a, &b, &c) == 3) {
    return Quarter(a, month_to_quarter(b));  // ISO yyyy-mm-dd
  }
  if (std::sscanf(text.c_str(), "%d/%d/%d", &a, &b, &c) == 3) {
    return Quarter(c, month_to_quarter(a));  // US m/d/yyyy, as in FRED-QD
  }
  throw DataError("unparseable quarterly date: '" + text + "'");
}

std::vector<Quarter> quarter_range(Quarter first, int count) {
  std::vector<Quarter> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(first + i);
  return out;
}

}  // namespace hnn
