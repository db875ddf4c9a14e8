#pragma once

#include <cstdio>
#include <string>

namespace mfc {

/// Fixed numeric formatting for every CSV/JSON artifact: '.' decimal point,
/// 17 significant digits, so doubles round-trip bit-faithfully.
inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace mfc
