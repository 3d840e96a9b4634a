#pragma once

#include <string>

namespace sgdct {

/// Shortest decimal string that parses back to exactly `v` ("nan", "inf" and
/// "-inf" for non-finite values).
std::string format_double(double v);

}  // namespace sgdct
