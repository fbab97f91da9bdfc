#pragma once

// Internal helpers for the strict JSON readers (session, machine, thresholds,
// scaling series, labels).

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "hpmdiag/error.hpp"
#include "json.hpp"

namespace hpmdiag::detail {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Parses JSON, mapping syntax errors to ParseError("<what>:<line>:<col>").
json parse_json_text(std::string_view text, const std::string& what);

// Reads fields from one JSON object and, in strict mode, rejects keys that
// were never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path, bool strict = true);

  const json& required(const std::string& key);
  const json* optional(const std::string& key);

  double number(const std::string& key);
  int integer(const std::string& key);
  std::string text(const std::string& key);

  // Throws ParseError naming the first unrecognized key (strict mode only).
  void finish() const;

  const std::string& path() const { return path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& object_;
  std::string path_;
  bool strict_;
  std::set<std::string> seen_;
};

double as_number(const json& value, const std::string& path);
int as_integer(const json& value, const std::string& path);
std::string as_text(const json& value, const std::string& path);

}  // namespace hpmdiag::detail
