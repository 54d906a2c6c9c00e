#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "coilsense/errors.hpp"

namespace coilsense {

/// Shortest round-trip decimal form; the one float formatting used in every
/// emitted file, so reruns stay byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_i64(int64_t v) { return std::to_string(v); }

inline double parse_double(std::string_view s, const std::string& what) {
  double v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(what + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline int64_t parse_i64(std::string_view s, const std::string& what) {
  int64_t v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(what + ": not an integer: '" + std::string(s) + "'");
  }
  return v;
}

inline uint64_t parse_u64(std::string_view s, const std::string& what) {
  uint64_t v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(what + ": not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

/// Splits on a single-character delimiter; empty fields are preserved.
inline std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string join_i64(const std::vector<int64_t>& v, char delim = ',') {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(delim);
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<int64_t> parse_i64_list(std::string_view s, const std::string& what) {
  std::vector<int64_t> out;
  for (auto part : split(s, ',')) out.push_back(parse_i64(trim(part), what));
  return out;
}

}  // namespace coilsense
