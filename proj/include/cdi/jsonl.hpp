#pragma once

#include <filesystem>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cdi/error.hpp"

namespace cdi::jsonl {

using nlohmann::json;

enum class FieldType { String, Integer, Number, Boolean, Array, Object, Any };

struct Field {
  std::string_view name;
  FieldType type;
  bool nullable = false;
};

// Rejects objects whose key set differs from `fields` or whose values have the
// wrong type. `where` names the source (file:line) for the error message.
void validate(const json& obj, std::initializer_list<Field> fields,
              const std::string& where);

// Calls `fn(object, where)` for each non-blank line of a JSONL file.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const json&, const std::string&)>& fn);

// Writes one compact JSON object per line, creating parent directories.
void write_lines(const std::filesystem::path& path, const std::vector<json>& rows);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Number rendered with exactly six decimals, for reports.
json fixed6(double value);

}  // namespace cdi::jsonl
