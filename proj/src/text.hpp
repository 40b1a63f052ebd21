#pragma once

#include <charconv>
#include <string>

namespace robinlab::detail {

/// Shortest decimal text that parses back to the same double.
inline std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace robinlab::detail
