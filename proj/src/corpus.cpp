#include "cdi/corpus.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <unordered_set>

namespace cdi::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// FixtureFetcher

FixtureFetcher::FixtureFetcher(fs::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "graph.tsv");
  if (!in) throw Error(ErrorKind::Io, "missing " + (dir_ / "graph.tsv").string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    std::string parent = line.substr(0, tab);
    std::string child = line.substr(tab + 1);
    categories_.insert(parent);
    if (fs::exists(dir_ / (child + ".txt"))) {
      pages_[parent].push_back(child);
    } else {
      categories_.insert(child);
      subcats_[parent].push_back(child);
    }
  }
}

bool FixtureFetcher::category_exists(const std::string& category) {
  return categories_.count(category) > 0;
}

std::vector<std::string> FixtureFetcher::subcategories(const std::string& category) {
  const auto it = subcats_.find(category);
  return it == subcats_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> FixtureFetcher::articles(const std::string& category) {
  const auto it = pages_.find(category);
  return it == pages_.end() ? std::vector<std::string>{} : it->second;
}

std::string FixtureFetcher::content(const std::string& title) {
  const fs::path p = dir_ / (title + ".txt");
  if (!fs::exists(p)) throw Error(ErrorKind::FetchFailure, "no article file for " + title);
  return jsonl::read_file(p);
}

// ---------------------------------------------------------------------------
// MediaWikiFetcher

MediaWikiFetcher::MediaWikiFetcher(std::string endpoint, double rate_limit_rps,
                                   std::string category_prefix)
    : endpoint_(net::parse_endpoint(endpoint)),
      limiter_(rate_limit_rps),
      prefix_(std::move(category_prefix)) {}

std::string MediaWikiFetcher::strip_prefix(const std::string& title) const {
  if (title.rfind(prefix_, 0) == 0) return title.substr(prefix_.size());
  return title;
}

bool MediaWikiFetcher::category_exists(const std::string& category) {
  limiter_.acquire();
  const json res = net::get_json(
      endpoint_, {{"action", "query"}, {"titles", prefix_ + category}, {"format", "json"}},
      ErrorKind::FetchFailure);
  const json& pages = res.at("query").at("pages");
  for (const auto& [id, page] : pages.items()) {
    if (page.contains("missing") || page.contains("invalid")) return false;
  }
  return !pages.empty();
}

std::vector<std::string> MediaWikiFetcher::members(const std::string& category,
                                                   const char* type) {
  std::vector<std::string> out;
  std::string cont;
  do {
    std::multimap<std::string, std::string> params{{"action", "query"},
                                                   {"list", "categorymembers"},
                                                   {"cmtitle", prefix_ + category},
                                                   {"cmtype", type},
                                                   {"cmlimit", "500"},
                                                   {"format", "json"}};
    if (!cont.empty()) params.emplace("cmcontinue", cont);
    limiter_.acquire();
    const json res = net::get_json(endpoint_, params, ErrorKind::FetchFailure);
    for (const json& m : res.at("query").at("categorymembers")) {
      out.push_back(strip_prefix(m.at("title").get<std::string>()));
    }
    cont.clear();
    if (res.contains("continue") && res["continue"].contains("cmcontinue")) {
      cont = res["continue"]["cmcontinue"].get<std::string>();
    }
  } while (!cont.empty());
  return out;
}

std::vector<std::string> MediaWikiFetcher::subcategories(const std::string& category) {
  return members(category, "subcat");
}

std::vector<std::string> MediaWikiFetcher::articles(const std::string& category) {
  return members(category, "page");
}

std::string MediaWikiFetcher::content(const std::string& title) {
  limiter_.acquire();
  const json res = net::get_json(endpoint_,
                                 {{"action", "query"},
                                  {"prop", "extracts"},
                                  {"explaintext", "1"},
                                  {"titles", title},
                                  {"format", "json"}},
                                 ErrorKind::FetchFailure);
  for (const auto& [id, page] : res.at("query").at("pages").items()) {
    if (page.contains("extract")) return page["extract"].get<std::string>();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Traversal

namespace {

template <typename Fn>
auto with_retries(int retries, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FetchFailure || attempt >= retries) throw;
    }
  }
}

}  // namespace

std::vector<TopicNode> expand_category_tree(const std::vector<std::string>& roots, Lang lang,
                                            int max_depth, CategoryFetcher& fetcher,
                                            int retries) {
  if (roots.empty()) throw Error(ErrorKind::InvalidArgument, "no root categories");
  if (max_depth < 0) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 0");

  std::vector<TopicNode> nodes;
  std::unordered_set<std::string> seen;
  std::deque<std::size_t> queue;
  for (const std::string& root : roots) {
    const bool exists = with_retries(retries, [&] { return fetcher.category_exists(root); });
    if (!exists) throw Error(ErrorKind::UnresolvableRoot, root);
    if (!seen.insert(root).second) continue;
    nodes.push_back({root, root, lang, 0, std::nullopt});
    queue.push_back(nodes.size() - 1);
  }

  while (!queue.empty()) {
    const TopicNode node = nodes[queue.front()];
    queue.pop_front();
    if (node.depth >= max_depth) continue;
    std::vector<std::string> children;
    try {
      children = with_retries(retries, [&] { return fetcher.subcategories(node.id); });
    } catch (const Error& e) {
      throw Error(e.kind(), node.id + ": " + e.what());
    }
    std::sort(children.begin(), children.end());
    for (std::string& child : children) {
      if (!seen.insert(child).second) continue;
      nodes.push_back({child, child, lang, node.depth + 1, node.id});
      queue.push_back(nodes.size() - 1);
    }
  }

  std::stable_sort(nodes.begin(), nodes.end(), [](const TopicNode& a, const TopicNode& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.title < b.title;
  });
  return nodes;
}

std::vector<Article> fetch_articles(const std::vector<TopicNode>& topics,
                                    CategoryFetcher& fetcher, const FetchLimits& limits,
                                    std::vector<SkipRecord>* skipped) {
  if (limits.article_cap < 1) throw Error(ErrorKind::InvalidArgument, "article cap must be >= 1");
  std::vector<Article> out;
  std::unordered_set<std::string> claimed;
  auto skip = [&](const std::string& title, ErrorKind kind, std::string detail) {
    if (skipped) skipped->push_back({title, kind, std::move(detail)});
  };

  for (const TopicNode& topic : topics) {
    std::vector<std::string> titles;
    try {
      titles = with_retries(limits.retries, [&] { return fetcher.articles(topic.id); });
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FetchFailure) throw;
      skip(topic.id, e.kind(), e.what());
      continue;
    }
    std::sort(titles.begin(), titles.end());
    titles.erase(std::unique(titles.begin(), titles.end()), titles.end());

    std::size_t taken = 0;
    for (const std::string& title : titles) {
      if (taken >= limits.article_cap) break;
      if (claimed.count(title)) continue;
      std::string body;
      try {
        body = with_retries(limits.retries, [&] { return fetcher.content(title); });
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FetchFailure) throw;
        skip(title, e.kind(), e.what());
        continue;
      }
      if (text::normalize_whitespace(body).empty()) {
        skip(title, ErrorKind::EmptyArticle, "empty article text");
        continue;
      }
      claimed.insert(title);
      out.push_back({topic.id, title, std::move(body)});
      ++taken;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

LengthBounds LengthBounds::defaults(Lang lang) {
  return lang == Lang::En ? LengthBounds{5, 80} : LengthBounds{10, 150};
}

bool is_abbreviation(std::string_view token) {
  static const std::unordered_set<std::string> kGuard = {
      "mr.",   "mrs.",  "ms.",   "dr.",  "prof.", "sr.",  "jr.",  "st.",   "mt.",
      "vs.",   "etc.",  "e.g.",  "i.e.", "u.s.",  "u.k.", "u.n.", "no.",   "inc.",
      "ltd.",  "co.",   "corp.", "gen.", "gov.",  "sen.", "rep.", "rev.",  "jan.",
      "feb.",  "mar.",  "apr.",  "jun.", "jul.",  "aug.", "sep.", "sept.", "oct.",
      "nov.",  "dec.",  "approx.", "ca.", "cf.",  "al.",  "fig.", "vol.",  "p.",
      "pp.",   "ed.",   "est.",  "a.m.", "p.m.",  "b.c.", "a.d.", "d.c.", "u.s.a."};
  const std::string lower = text::ascii_lower(token);
  if (kGuard.count(lower)) return true;
  // Single initials such as "J." in "J. Smith".
  return token.size() == 2 && token[0] >= 'A' && token[0] <= 'Z' && token[1] == '.';
}

namespace {

bool is_closer(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == U')' || cp == U']' || cp == 0x201D ||
         cp == 0x2019 || cp == 0x300D || cp == 0x300F || cp == 0xFF09;
}

bool within(const std::string& sentence, Lang lang, LengthBounds bounds) {
  std::size_t len = 0;
  if (lang == Lang::En) {
    len = text::split_whitespace(sentence).size();
  } else {
    for (char32_t cp : text::decode_utf8(sentence)) {
      if (!text::is_space(cp)) ++len;
    }
  }
  return len >= bounds.min_len && len <= bounds.max_len;
}

}  // namespace

std::vector<std::string> extract_sentences(std::string_view article_text, Lang lang,
                                           LengthBounds bounds) {
  const std::u32string cps = text::decode_utf8(article_text);
  std::vector<std::string> out;
  std::size_t start = 0;

  auto emit = [&](std::size_t end) {
    std::string s = text::normalize_whitespace(text::encode_utf8(
        std::u32string_view(cps).substr(start, end - start)));
    start = end;
    if (!s.empty() && within(s, lang, bounds)) out.push_back(std::move(s));
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (lang == Lang::Cn) {
      if (cp != 0x3002 && cp != 0xFF01 && cp != 0xFF1F && cp != U'!' && cp != U'?') continue;
      std::size_t end = i + 1;
      while (end < cps.size() && is_closer(cps[end])) ++end;
      emit(end);
      i = end - 1;
      continue;
    }
    if (cp != U'.' && cp != U'!' && cp != U'?') continue;
    std::size_t end = i + 1;
    while (end < cps.size() && (cps[end] == U'.' || cps[end] == U'!' || cps[end] == U'?'))
      ++end;
    while (end < cps.size() && is_closer(cps[end])) ++end;
    if (end < cps.size() && !text::is_space(cps[end])) {
      i = end - 1;
      continue;
    }
    if (cp == U'.') {
      std::size_t tok_start = i;
      while (tok_start > start && !text::is_space(cps[tok_start - 1])) --tok_start;
      while (tok_start < i && (cps[tok_start] == U'(' || cps[tok_start] == U'"')) ++tok_start;
      const std::string token =
          text::encode_utf8(std::u32string_view(cps).substr(tok_start, i + 1 - tok_start));
      if (end == i + 1 && is_abbreviation(token)) continue;
    }
    emit(end);
    i = end - 1;
  }
  if (start < cps.size()) emit(cps.size());
  return out;
}

std::vector<RawSentence> build_sentences(const std::vector<Article>& articles, Lang lang,
                                         LengthBounds bounds) {
  std::vector<RawSentence> out;
  for (const Article& a : articles) {
    for (std::string& s : extract_sentences(a.text, lang, bounds)) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-s%06zu", std::string(to_string(lang)).c_str(),
                    out.size());
      out.push_back({id, lang, std::move(s), a.topic_id, a.title});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const RawSentence& s) {
  return {{"id", s.id},
          {"lang", to_string(s.lang)},
          {"text", s.text},
          {"topic_id", s.topic_id},
          {"article_title", s.article_title}};
}

RawSentence raw_sentence_from_json(const json& obj, const std::string& where) {
  using jsonl::FieldType;
  jsonl::validate(obj,
                  {{"id", FieldType::String},
                   {"lang", FieldType::String},
                   {"text", FieldType::String},
                   {"topic_id", FieldType::String},
                   {"article_title", FieldType::String}},
                  where);
  RawSentence s;
  s.id = obj["id"];
  try {
    s.lang = parse_lang(obj["lang"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
  }
  s.text = obj["text"];
  s.topic_id = obj["topic_id"];
  s.article_title = obj["article_title"];
  if (text::normalize_whitespace(s.text).empty()) {
    throw Error(ErrorKind::SchemaViolation, where + ": empty sentence text");
  }
  return s;
}

std::vector<RawSentence> read_sentences(const fs::path& path) {
  std::vector<RawSentence> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    out.push_back(raw_sentence_from_json(obj, where));
  });
  return out;
}

void write_sentences(const fs::path& path, const std::vector<RawSentence>& sentences) {
  std::vector<json> rows;
  rows.reserve(sentences.size());
  for (const RawSentence& s : sentences) rows.push_back(to_json(s));
  jsonl::write_lines(path, rows);
}

json to_json(const CorpusManifest& m) {
  json topics = json::array();
  for (const TopicNode& t : m.topics) {
    topics.push_back({{"id", t.id},
                      {"title", t.title},
                      {"lang", to_string(t.lang)},
                      {"depth", t.depth},
                      {"parent_id", t.parent_id ? json(*t.parent_id) : json(nullptr)}});
  }
  return {{"lang", to_string(m.lang)},
          {"topics", topics},
          {"sentence_count", m.sentence_count},
          {"source_mode", m.source_mode},
          {"created_at", m.created_at}};
}

CorpusManifest manifest_from_json(const json& obj) {
  using jsonl::FieldType;
  jsonl::validate(obj,
                  {{"lang", FieldType::String},
                   {"topics", FieldType::Array},
                   {"sentence_count", FieldType::Integer},
                   {"source_mode", FieldType::String},
                   {"created_at", FieldType::String}},
                  "manifest");
  CorpusManifest m;
  m.lang = parse_lang(obj["lang"].get<std::string>());
  for (const json& t : obj["topics"]) {
    jsonl::validate(t,
                    {{"id", FieldType::String},
                     {"title", FieldType::String},
                     {"lang", FieldType::String},
                     {"depth", FieldType::Integer},
                     {"parent_id", FieldType::String, true}},
                    "manifest topic");
    TopicNode n{t["id"], t["title"], parse_lang(t["lang"].get<std::string>()),
                t["depth"].get<int>(), std::nullopt};
    if (!t["parent_id"].is_null()) n.parent_id = t["parent_id"].get<std::string>();
    m.topics.push_back(std::move(n));
  }
  m.sentence_count = obj["sentence_count"].get<std::size_t>();
  m.source_mode = obj["source_mode"];
  m.created_at = obj["created_at"];
  return m;
}

}  // namespace cdi::corpus
