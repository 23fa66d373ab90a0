#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mcdn {

// Error raised by the line-oriented text readers (graphs, parameter files,
// CSV).  Always carries a 1-based line number so tools can point at the
// offending input.
struct ParseError : std::runtime_error {
  ParseError(std::string_view source, int line_no, const std::string& message)
      : std::runtime_error(std::string(source) + ":" + std::to_string(line_no) +
                           ": " + message),
        line(line_no) {}
  int line;
};

namespace detail {

// Splits a line on whitespace; everything after '#' is a comment.
inline std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, std::string_view source, int line) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  return v;
}

inline long parse_long(const std::string& tok, std::string_view source, int line) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(source, line, "expected an integer, got '" + tok + "'");
  return v;
}

}  // namespace detail
}  // namespace mcdn
