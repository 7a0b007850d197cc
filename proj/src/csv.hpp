#pragma once

// Small helpers shared by the CSV readers and writers.

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "powertrain/error.hpp"

namespace powertrain::csv {

// Shortest decimal representation that round-trips.
inline std::string number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename T>
T parse_field(std::string_view field, const std::string& source, std::size_t line, const char* name) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || field.empty()) {
    throw ParseError(source, line, std::string("bad value '") + std::string(field) + "' for " + name);
  }
  return value;
}

}  // namespace powertrain::csv
