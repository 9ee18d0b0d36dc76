#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace epsbench {

// Shortest-safe text for CSV cells: 17 significant digits, so equal doubles
// always print identically and every value round-trips.
inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Fixed scientific form with 17 significant digits, used by the model files.
inline std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

}  // namespace epsbench
