#pragma once

// Schema-checked field access for the dataset JSON formats. Failures name the
// offending field path.

#include <climits>
#include <cstdint>
#include <string>
#include <string_view>

#include "dqa/errors.hpp"
#include "json.hpp"

namespace dqa::detail {

inline nlohmann::json parse_json(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i < end; ++i) line += text[i] == '\n';
    throw SchemaError(what + ": invalid JSON at line " + std::to_string(line) + ": " + e.what());
  }
}

inline const nlohmann::json& get_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

inline int get_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = get_field(obj, key, where);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
  if (v.is_number_unsigned() ? v.get<std::uint64_t>() > INT_MAX
                             : v.get<std::int64_t>() < INT_MIN || v.get<std::int64_t>() > INT_MAX) {
    throw SchemaError(where + "." + key + ": integer out of range");
  }
  return v.get<int>();
}

inline std::string get_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = get_field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace dqa::detail
