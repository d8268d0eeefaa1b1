#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mathforge::text {

/// One decoded code point and the number of bytes it occupied.
struct CodePoint {
  char32_t value = 0;
  std::size_t length = 0;
};

/// Decodes the UTF-8 sequence starting at `pos`. Malformed bytes decode as a
/// single-byte U+FFFD so scanning always makes progress.
CodePoint decode_utf8(std::string_view s, std::size_t pos);

void append_utf8(std::string& out, char32_t cp);

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

/// Horizontal whitespace, including NBSP and the ideographic space.
bool is_space(char32_t cp);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Splits on '\n' (a trailing '\r' is dropped). Keeps empty lines.
std::vector<std::string_view> split_lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace mathforge::text
