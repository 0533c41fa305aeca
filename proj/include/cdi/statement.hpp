#pragma once

// Bilingual statement pairs scored by both culture models.

#include <filesystem>
#include <string>
#include <vector>

#include "cdi/jsonl.hpp"

namespace cdi {

// An English statement awaiting translation: `{"id","en","topic"}`.
struct Statement {
  std::string id;
  std::string en_text;
  std::string topic;

  bool operator==(const Statement&) const = default;
};

// `{"pair_id","en","cn","topic"}`.
struct StatementPair {
  std::string pair_id;
  std::string en_text;
  std::string cn_text;
  std::string topic;

  bool operator==(const StatementPair&) const = default;
};

nlohmann::json to_json(const Statement& s);
nlohmann::json to_json(const StatementPair& p);
Statement statement_from_json(const nlohmann::json& obj, const std::string& where);
StatementPair pair_from_json(const nlohmann::json& obj, const std::string& where);

std::vector<Statement> read_statements(const std::filesystem::path& path);
void write_statements(const std::filesystem::path& path, const std::vector<Statement>& statements);
std::vector<StatementPair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<StatementPair>& pairs);

}  // namespace cdi
