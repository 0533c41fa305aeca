#pragma once

// Category-tree traversal, article retrieval and sentence segmentation.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cdi/jsonl.hpp"
#include "cdi/net.hpp"
#include "cdi/text.hpp"

namespace cdi::corpus {

struct TopicNode {
  std::string id;
  std::string title;
  Lang lang = Lang::En;
  int depth = 0;
  std::optional<std::string> parent_id;

  bool operator==(const TopicNode&) const = default;
};

struct RawSentence {
  std::string id;
  Lang lang = Lang::En;
  std::string text;
  std::string topic_id;
  std::string article_title;
};

struct CorpusManifest {
  Lang lang = Lang::En;
  std::vector<TopicNode> topics;
  std::size_t sentence_count = 0;
  std::string source_mode;
  std::string created_at;
};

// Listing and content calls against a category/article store. Implementations
// throw Error(FetchFailure) on transport problems.
class CategoryFetcher {
 public:
  virtual ~CategoryFetcher() = default;
  virtual bool category_exists(const std::string& category) = 0;
  virtual std::vector<std::string> subcategories(const std::string& category) = 0;
  virtual std::vector<std::string> articles(const std::string& category) = 0;
  // Plain text of an article; markup is already stripped.
  virtual std::string content(const std::string& title) = 0;
};

// Directory of `<title>.txt` articles plus `graph.tsv` with `parent<TAB>child`
// rows. A child naming an existing `<child>.txt` is an article link; any other
// child is a subcategory.
class FixtureFetcher : public CategoryFetcher {
 public:
  explicit FixtureFetcher(std::filesystem::path dir);

  bool category_exists(const std::string& category) override;
  std::vector<std::string> subcategories(const std::string& category) override;
  std::vector<std::string> articles(const std::string& category) override;
  std::string content(const std::string& title) override;

 private:
  std::filesystem::path dir_;
  std::set<std::string> categories_;
  std::map<std::string, std::vector<std::string>> subcats_;
  std::map<std::string, std::vector<std::string>> pages_;
};

// MediaWiki action API client (list=categorymembers, prop=extracts).
class MediaWikiFetcher : public CategoryFetcher {
 public:
  MediaWikiFetcher(std::string endpoint, double rate_limit_rps,
                   std::string category_prefix = "Category:");

  bool category_exists(const std::string& category) override;
  std::vector<std::string> subcategories(const std::string& category) override;
  std::vector<std::string> articles(const std::string& category) override;
  std::string content(const std::string& title) override;

 private:
  std::vector<std::string> members(const std::string& category, const char* type);
  std::string strip_prefix(const std::string& title) const;

  net::Endpoint endpoint_;
  net::RateLimiter limiter_;
  std::string prefix_;
};

// Breadth-first closure of `roots` up to `max_depth` hops. First discovery
// wins; output sorted by (depth, title). Listing calls are retried `retries`
// times before FetchFailure propagates.
std::vector<TopicNode> expand_category_tree(const std::vector<std::string>& roots, Lang lang,
                                            int max_depth, CategoryFetcher& fetcher,
                                            int retries = 2);

struct Article {
  std::string topic_id;
  std::string title;
  std::string text;
};

struct SkipRecord {
  std::string title;
  ErrorKind reason;
  std::string detail;
};

struct FetchLimits {
  std::size_t article_cap = 1;
  int retries = 2;
};

// Articles per topic in title order, at most `article_cap` per topic. An
// article linked from several topics is attributed to the first topic in
// input order. Failed and empty articles are skipped and appended to `skipped`.
std::vector<Article> fetch_articles(const std::vector<TopicNode>& topics,
                                    CategoryFetcher& fetcher, const FetchLimits& limits,
                                    std::vector<SkipRecord>* skipped = nullptr);

struct LengthBounds {
  std::size_t min_len;
  std::size_t max_len;

  // English: 5-80 whitespace tokens. Chinese: 10-150 characters.
  static LengthBounds defaults(Lang lang);
};

// Splits on . ! ? (English, with an abbreviation guard) or 。！？ (Chinese)
// and drops sentences outside `bounds`. Document order is kept.
std::vector<std::string> extract_sentences(std::string_view article_text, Lang lang,
                                           LengthBounds bounds);

bool is_abbreviation(std::string_view token);

// Segments every article and assigns ids `<lang>-s<index>`.
std::vector<RawSentence> build_sentences(const std::vector<Article>& articles, Lang lang,
                                         LengthBounds bounds);

nlohmann::json to_json(const RawSentence& s);
RawSentence raw_sentence_from_json(const nlohmann::json& obj, const std::string& where);
std::vector<RawSentence> read_sentences(const std::filesystem::path& path);
void write_sentences(const std::filesystem::path& path, const std::vector<RawSentence>& sentences);

nlohmann::json to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const nlohmann::json& obj);

}  // namespace cdi::corpus
