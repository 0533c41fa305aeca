#pragma once

// Round-trip paraphrasing through a pivot language, and the translation
// clients behind it.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdi/fabrication.hpp"
#include "cdi/net.hpp"
#include "cdi/statement.hpp"

namespace cdi::backtranslate {

using fabrication::LabeledSample;

enum class DebiasMode { None, NegativeOnly, Both };

std::string_view to_string(DebiasMode mode);
DebiasMode parse_mode(std::string_view name);

struct PivotConfig {
  std::string source_lang;
  std::string pivot_lang;

  // Throws InvalidArgument when source and pivot coincide.
  void validate() const;
};

// en -> de, cn -> ja.
PivotConfig default_pivot(Lang lang);

class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  // Throws TranslationFailure.
  virtual std::string translate(const std::string& text, const std::string& source,
                                const std::string& target) const = 0;
  virtual std::string backend() const = 0;
};

class IdentityClient : public TranslationClient {
 public:
  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) const override;
  std::string backend() const override { return "mock-identity"; }
};

// Phrase substitution tables, one per direction. Spaced scripts are matched
// token by token (case-insensitive, trailing punctuation kept); unspaced
// scripts by code point substrings. Longest phrase wins; anything unmatched
// passes through.
class TableClient : public TranslationClient {
 public:
  using Table = std::map<std::string, std::string>;

  void add_table(const std::string& source, const std::string& target, Table table);

  // Reads every `<source>-<target>.tsv` in `dir`; lines are `src<TAB>tgt`.
  static TableClient load(const std::filesystem::path& dir);
  static Table read_table(const std::filesystem::path& path);

  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) const override;
  std::string backend() const override { return "mock-table"; }

 private:
  struct Direction {
    Table table;
    std::size_t max_phrase = 1;  // tokens or code points
  };
  std::map<std::pair<std::string, std::string>, Direction> directions_;
};

// POST {"text","source","target"} -> {"text"}.
class HttpClient : public TranslationClient {
 public:
  HttpClient(const std::string& endpoint, double rate_limit_rps, int timeout_seconds = 30);

  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) const override;
  std::string backend() const override { return "http"; }

 private:
  net::Endpoint endpoint_;
  mutable net::RateLimiter limiter_;
  int timeout_;
};

// backend: "mock-identity" | "mock-table" | "http".
std::unique_ptr<TranslationClient> make_client(const std::string& backend,
                                               const std::string& endpoint,
                                               const std::filesystem::path& tables_dir,
                                               double rate_limit_rps);

// Round-trip results on disk at `<root>/<backend>/<source>-<pivot>.jsonl`,
// one `{"h","out"}` line per entry, keyed by the FNV-1a hash of the input.
class TranslationCache {
 public:
  TranslationCache(const std::filesystem::path& root, const std::string& backend,
                   const PivotConfig& cfg);

  std::optional<std::string> get(const std::string& text) const;
  void put(const std::string& text, const std::string& out);
  const std::filesystem::path& path() const { return path_; }
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

// client.translate(client.translate(text, source, pivot), pivot, source).
// Retries each leg `retries` extra times; an empty result is a failure.
std::string back_translate(const std::string& text, const PivotConfig& cfg,
                           const TranslationClient& client, int retries = 2);

struct DebiasOptions {
  TranslationCache* cache = nullptr;
  int retries = 2;
  std::size_t parallelism = 1;
};

// none: unchanged. negative-only: label-0 samples round-tripped. both: all.
// A sample whose round trip fails keeps its text with bt_applied = false.
std::vector<LabeledSample> debias_dataset(const std::vector<LabeledSample>& samples,
                                          DebiasMode mode, const PivotConfig& cfg,
                                          const TranslationClient& client,
                                          const DebiasOptions& opts = {});

// en -> cn translation of each statement. Failed statements are dropped and
// their ids appended to `dropped`.
std::vector<StatementPair> translate_pairs(const std::vector<Statement>& statements,
                                           const TranslationClient& client, int retries = 2,
                                           std::vector<std::string>* dropped = nullptr);

}  // namespace cdi::backtranslate
