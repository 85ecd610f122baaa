#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "adg/error.hpp"

namespace adg::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Parses a document, converting parser failures into a `syntax` error that
/// names line and column.
inline json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error("syntax", "line " + std::to_string(line) + ", column " + std::to_string(column) +
                              ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path, path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path, path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error("schema", where + " must be an object", where);
}

inline void reject_unknown_fields(const json& j, std::initializer_list<std::string_view> allowed,
                                  const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error("unknown-field", "unknown field '" + key + "' in " + where, where);
    }
  }
}

inline const json& required(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw Error("schema", std::string("missing field '") + key + "' in " + where, where);
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error("schema", where + ": " + e.what(), where);
  }
}

template <typename T>
T required_as(const json& j, const char* key, const std::string& where) {
  return get_as<T>(required(j, key, where), where + "." + key);
}

template <typename T>
std::optional<T> optional_as(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_as<T>(*it, where + "." + key);
}

inline void require_schema(const json& j, std::string_view expected) {
  const auto schema = required_as<std::string>(j, "schema", "document");
  if (schema != expected) {
    throw Error("schema", "expected schema '" + std::string(expected) + "', got '" + schema + "'");
  }
}

}  // namespace adg::detail
