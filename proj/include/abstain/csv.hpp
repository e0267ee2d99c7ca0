#ifndef ABSTAIN_CSV_HPP_
#define ABSTAIN_CSV_HPP_

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

namespace abstain::csv {

// Quotes a field only when it needs it (RFC 4180).
inline std::string field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Shortest representation that round-trips; empty for a missing value.
inline std::string number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string number(std::optional<double> v) {
  return v ? number(*v) : std::string();
}

}  // namespace abstain::csv

#endif  // ABSTAIN_CSV_HPP_
