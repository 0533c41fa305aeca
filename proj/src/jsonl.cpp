#include "cdi/jsonl.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cdi::jsonl {

namespace {

bool has_type(const json& v, FieldType type) {
  switch (type) {
    case FieldType::String: return v.is_string();
    case FieldType::Integer: return v.is_number_integer();
    case FieldType::Number: return v.is_number();
    case FieldType::Boolean: return v.is_boolean();
    case FieldType::Array: return v.is_array();
    case FieldType::Object: return v.is_object();
    case FieldType::Any: return true;
  }
  return false;
}

}  // namespace

void validate(const json& obj, std::initializer_list<Field> fields,
              const std::string& where) {
  if (!obj.is_object()) {
    throw Error(ErrorKind::SchemaViolation, where + ": expected a JSON object");
  }
  for (const Field& f : fields) {
    const auto it = obj.find(std::string(f.name));
    if (it == obj.end()) {
      throw Error(ErrorKind::SchemaViolation,
                  where + ": missing field '" + std::string(f.name) + "'");
    }
    if (it->is_null() && f.nullable) continue;
    if (!has_type(*it, f.type)) {
      throw Error(ErrorKind::SchemaViolation,
                  where + ": field '" + std::string(f.name) + "' has wrong type");
    }
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const Field& f : fields) known = known || f.name == key;
    if (!known) {
      throw Error(ErrorKind::SchemaViolation,
                  where + ": unknown field '" + key + "'");
    }
  }
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
    }
    try {
      fn(obj, where);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
    }
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string out;
  for (const json& row : rows) {
    out += row.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

json read_json(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaViolation, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& value) {
  write_file(path, value.dump(2) + "\n");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

json fixed6(double value) {
  if (!std::isfinite(value)) return nullptr;
  const double rounded = std::round(value * 1e6) / 1e6;
  return rounded == 0.0 ? 0.0 : rounded;
}

}  // namespace cdi::jsonl
