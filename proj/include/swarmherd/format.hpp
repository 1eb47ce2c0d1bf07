#pragma once

#include <string>

namespace swarmherd {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace swarmherd
