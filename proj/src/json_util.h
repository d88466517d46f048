#ifndef CAHAR_SRC_JSON_UTIL_H_
#define CAHAR_SRC_JSON_UTIL_H_

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cahar/error.h"

namespace cahar::json_util {

inline nlohmann::ordered_json parse(std::string_view document,
                                    std::string_view what) {
  try {
    return nlohmann::ordered_json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

// Strict object check: every `required` key present, nothing outside
// `required` + `optional`.
inline void require_keys(const nlohmann::ordered_json& j, std::string_view where,
                         std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object()) {
    throw DataError(std::string(where) + " must be a JSON object");
  }
  for (auto key : required) {
    if (!j.contains(key)) {
      throw DataError(std::string(where) + " is missing field '" +
                      std::string(key) + "'");
    }
  }
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const bool known =
        std::find(required.begin(), required.end(), key) != required.end() ||
        std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) {
      throw DataError(std::string(where) + " has unknown field '" + key + "'");
    }
  }
}

template <typename T>
T get(const nlohmann::ordered_json& j, std::string_view key,
      std::string_view where) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string(where) + "." + std::string(key) +
                    " has the wrong type or is missing: " + e.what());
  }
}

// Absent and null both mean "not set".
template <typename T>
std::optional<T> get_optional(const nlohmann::ordered_json& j,
                              std::string_view key, std::string_view where) {
  auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get<T>(j, key, where);
}

}  // namespace cahar::json_util

#endif  // CAHAR_SRC_JSON_UTIL_H_
