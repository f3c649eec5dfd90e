#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace sqrs {

/// Shortest "%.*g" rendering that round-trips the double exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace sqrs
