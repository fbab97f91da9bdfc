#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

namespace hpmdiag::detail {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(what + ":" + std::to_string(line) + ":" + std::to_string(column),
                     "malformed JSON");
  }
}

ObjectReader::ObjectReader(const json& object, std::string path, bool strict)
    : object_(object), path_(std::move(path)), strict_(strict) {
  if (!object_.is_object()) throw ParseError(path_.empty() ? "<root>" : path_, "expected an object");
}

const json& ObjectReader::required(const std::string& key) {
  const json* value = optional(key);
  if (value == nullptr) throw ParseError(child(key), "missing required key");
  return *value;
}

const json* ObjectReader::optional(const std::string& key) {
  seen_.insert(key);
  const auto it = object_.find(key);
  return it == object_.end() ? nullptr : &*it;
}

double ObjectReader::number(const std::string& key) { return as_number(required(key), child(key)); }
int ObjectReader::integer(const std::string& key) { return as_integer(required(key), child(key)); }
std::string ObjectReader::text(const std::string& key) { return as_text(required(key), child(key)); }

void ObjectReader::finish() const {
  if (!strict_) return;
  for (const auto& [key, value] : object_.items()) {
    if (!seen_.count(key)) throw ParseError(child(key), "unknown key (strict mode)");
  }
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ParseError(path, "expected a number");
  return value.get<double>();
}

int as_integer(const json& value, const std::string& path) {
  if (value.is_number_integer()) {
    const auto v = value.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ParseError(path, "integer out of range");
    }
    return static_cast<int>(v);
  }
  if (value.is_number_float()) {
    const double v = value.get<double>();
    if (std::floor(v) == v && std::fabs(v) < 2e9) return static_cast<int>(v);
  }
  throw ParseError(path, "expected an integer");
}

std::string as_text(const json& value, const std::string& path) {
  if (!value.is_string()) throw ParseError(path, "expected a string");
  return value.get<std::string>();
}

}  // namespace hpmdiag::detail
