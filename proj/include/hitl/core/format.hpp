#pragma once

#include <charconv>
#include <optional>
#include <string>

namespace hitl {

/// Shortest round-trip decimal form; identical bytes on every run.
inline std::string format_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <class T>
std::string format_optional(const std::optional<T>& x) {
  if (!x) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*x);
  } else {
    return std::to_string(*x);
  }
}

}  // namespace hitl
