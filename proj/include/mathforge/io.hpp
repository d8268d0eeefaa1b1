#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mathforge::io {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record that does not match its schema. `line` is 1-based, 0 when unknown.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to `path.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Sorted keys, no whitespace, UTF-8 kept verbatim.
std::string canonical(const nlohmann::json& j);

struct JsonLine {
  std::size_t line;
  nlohmann::json value;
};

/// Blank lines are skipped; a malformed line raises SchemaError.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<nlohmann::json>& records);

}  // namespace mathforge::io
