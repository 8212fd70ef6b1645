#pragma once

#include <charconv>
#include <string>

namespace treemart {

/// Locale-independent decimal text with 17 significant digits.
inline std::string format_real(double value) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, end);
}

}  // namespace treemart
