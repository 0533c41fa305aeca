#include "cdi/statement.hpp"

#include "cdi/error.hpp"
#include "cdi/text.hpp"

namespace cdi {

namespace fs = std::filesystem;
using nlohmann::json;
using jsonl::FieldType;

namespace {

void require_text(const std::string& s, const char* field, const std::string& where) {
  if (text::normalize_whitespace(s).empty()) {
    throw Error(ErrorKind::SchemaViolation, where + ": empty " + field);
  }
}

}  // namespace

json to_json(const Statement& s) {
  return {{"id", s.id}, {"en", s.en_text}, {"topic", s.topic}};
}

json to_json(const StatementPair& p) {
  return {{"pair_id", p.pair_id}, {"en", p.en_text}, {"cn", p.cn_text}, {"topic", p.topic}};
}

Statement statement_from_json(const json& obj, const std::string& where) {
  jsonl::validate(obj,
                  {{"id", FieldType::String}, {"en", FieldType::String}, {"topic", FieldType::String}},
                  where);
  Statement s{obj["id"], obj["en"], obj["topic"]};
  require_text(s.en_text, "en", where);
  return s;
}

StatementPair pair_from_json(const json& obj, const std::string& where) {
  jsonl::validate(obj,
                  {{"pair_id", FieldType::String},
                   {"en", FieldType::String},
                   {"cn", FieldType::String},
                   {"topic", FieldType::String}},
                  where);
  StatementPair p{obj["pair_id"], obj["en"], obj["cn"], obj["topic"]};
  require_text(p.en_text, "en", where);
  require_text(p.cn_text, "cn", where);
  return p;
}

std::vector<Statement> read_statements(const fs::path& path) {
  std::vector<Statement> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    out.push_back(statement_from_json(obj, where));
  });
  return out;
}

void write_statements(const fs::path& path, const std::vector<Statement>& statements) {
  std::vector<json> rows;
  for (const Statement& s : statements) rows.push_back(to_json(s));
  jsonl::write_lines(path, rows);
}

std::vector<StatementPair> read_pairs(const fs::path& path) {
  std::vector<StatementPair> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    out.push_back(pair_from_json(obj, where));
  });
  return out;
}

void write_pairs(const fs::path& path, const std::vector<StatementPair>& pairs) {
  std::vector<json> rows;
  for (const StatementPair& p : pairs) rows.push_back(to_json(p));
  jsonl::write_lines(path, rows);
}

}  // namespace cdi
