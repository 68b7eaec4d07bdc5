#pragma once

// Line-oriented parsing helpers for the whitespace-separated text formats.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "g2sfusion/error.h"

namespace g2sfusion::detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

/// Blank lines and '#' comments carry no record.
inline bool is_blank_or_comment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

inline double parse_double(std::string_view token, const std::string& source, int line) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(source, line, "expected a real number, got '" + std::string(token) + "'");
  }
  return value;
}

inline int parse_int(std::string_view token, const std::string& source, int line) {
  int value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(source, line, "expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  return is;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  }
  return os;
}

}  // namespace g2sfusion::detail
