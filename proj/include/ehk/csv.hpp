#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>

namespace ehk::csv {

/// Shortest round-trip decimal form of a double ('.' separator, locale free).
inline std::string num(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline std::string num(long long x) { return std::to_string(x); }
inline std::string num(std::size_t x) { return std::to_string(x); }
inline std::string num(int x) { return std::to_string(x); }

template <class... Cols>
void row(std::ostream& os, const Cols&... cols) {
  bool first = true;
  auto put = [&](const auto& c) {
    if (!first) os << ',';
    first = false;
    if constexpr (std::is_convertible_v<decltype(c), std::string_view>) {
      os << std::string_view(c);
    } else {
      os << num(c);
    }
  };
  (put(cols), ...);
  os << '\n';
}

}  // namespace ehk::csv
