#include "swarmherd/format.hpp"

#include <array>
#include <charconv>

namespace swarmherd {

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

}  // namespace swarmherd
