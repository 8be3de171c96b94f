#pragma once

#include <charconv>
#include <optional>
#include <string>

namespace decap {

/// Shortest round-trip decimal form; locale independent.
inline std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return ec == std::errc() ? std::string(buffer, end) : std::string("nan");
}

/// Empty string for an absent value (CSV convention).
inline std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace decap
