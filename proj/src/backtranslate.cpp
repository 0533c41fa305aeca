#include "cdi/backtranslate.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "cdi/log.hpp"

namespace cdi::backtranslate {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(DebiasMode mode) {
  switch (mode) {
    case DebiasMode::None: return "none";
    case DebiasMode::NegativeOnly: return "negative-only";
    case DebiasMode::Both: return "both";
  }
  return "none";
}

DebiasMode parse_mode(std::string_view name) {
  if (name == "none") return DebiasMode::None;
  if (name == "negative-only") return DebiasMode::NegativeOnly;
  if (name == "both") return DebiasMode::Both;
  throw Error(ErrorKind::InvalidArgument, "unknown debias mode: " + std::string(name));
}

void PivotConfig::validate() const {
  if (source_lang.empty() || pivot_lang.empty()) {
    throw Error(ErrorKind::InvalidArgument, "pivot config needs source and pivot languages");
  }
  if (source_lang == pivot_lang) {
    throw Error(ErrorKind::InvalidArgument, "pivot language equals source: " + source_lang);
  }
}

PivotConfig default_pivot(Lang lang) {
  return lang == Lang::En ? PivotConfig{"en", "de"} : PivotConfig{"cn", "ja"};
}

std::string IdentityClient::translate(const std::string& text, const std::string&,
                                      const std::string&) const {
  return text;
}

// ---------------------------------------------------------------------------
// TableClient

namespace {

bool is_edge_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
         c == '\'' || c == '(' || c == ')';
}

struct Piece {
  std::string lead;
  std::string core;
  std::string trail;
};

Piece split_piece(const std::string& tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && is_edge_punct(tok[b]) && tok[b] != '\'') ++b;
  while (e > b && is_edge_punct(tok[e - 1])) --e;
  return {tok.substr(0, b), tok.substr(b, e - b), tok.substr(e)};
}

const std::map<std::string, std::string>& to_fullwidth() {
  static const std::map<std::string, std::string> m = {
      {".", "。"}, {",", "，"}, {"!", "！"}, {"?", "？"}, {";", "；"}, {":", "："}};
  return m;
}

std::string convert_punct(const std::string& s, bool to_unspaced) {
  if (to_unspaced) {
    std::string out;
    for (char c : s) {
      const auto it = to_fullwidth().find(std::string(1, c));
      out += it == to_fullwidth().end() ? std::string(1, c) : it->second;
    }
    return out;
  }
  std::string out = s;
  for (const auto& [ascii, wide] : to_fullwidth()) {
    for (std::size_t pos; (pos = out.find(wide)) != std::string::npos;) out.replace(pos, wide.size(), ascii);
  }
  return out;
}

std::string carry_case(const std::string& from, std::string to) {
  if (!from.empty() && !to.empty() && from[0] >= 'A' && from[0] <= 'Z' && to[0] >= 'a' &&
      to[0] <= 'z') {
    to[0] = static_cast<char>(to[0] - 'a' + 'A');
  }
  return to;
}

}  // namespace

void TableClient::add_table(const std::string& source, const std::string& target, Table table) {
  Direction d;
  const bool spaced = !is_unspaced_script(source);
  for (auto& [k, v] : table) {
    const std::string key = spaced ? text::ascii_lower(text::normalize_whitespace(k)) : k;
    if (key.empty()) continue;
    const std::size_t len =
        spaced ? text::split_whitespace(key).size() : text::code_point_count(key);
    d.max_phrase = std::max(d.max_phrase, len);
    d.table[key] = v;
  }
  directions_[{source, target}] = std::move(d);
}

TableClient::Table TableClient::read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::SchemaViolation,
                  path.string() + ":" + std::to_string(n) + ": expected src<TAB>tgt");
    }
    t[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return t;
}

TableClient TableClient::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "no table directory " + dir.string());
  TableClient c;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".tsv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const std::string stem = p.stem().string();
    const auto dash = stem.find('-');
    if (dash == std::string::npos) continue;
    c.add_table(stem.substr(0, dash), stem.substr(dash + 1), read_table(p));
  }
  return c;
}

std::string TableClient::translate(const std::string& text, const std::string& source,
                                   const std::string& target) const {
  const auto it = directions_.find({source, target});
  if (it == directions_.end()) {
    throw Error(ErrorKind::TranslationFailure, "no table for " + source + "-" + target);
  }
  const Direction& d = it->second;
  const bool src_unspaced = is_unspaced_script(source);
  const bool tgt_unspaced = is_unspaced_script(target);
  std::vector<std::string> out;

  if (!src_unspaced) {
    std::vector<Piece> toks;
    for (const auto& t : text::split_whitespace(text)) toks.push_back(split_piece(t));
    for (std::size_t i = 0; i < toks.size();) {
      std::size_t matched = 0;
      std::string rep;
      const std::size_t longest = std::min(d.max_phrase, toks.size() - i);
      for (std::size_t len = longest; len >= 1 && matched == 0; --len) {
        std::string key;
        bool clean = !toks[i].core.empty();
        for (std::size_t k = 0; k < len && clean; ++k) {
          const Piece& p = toks[i + k];
          if (p.core.empty() || (k > 0 && !p.lead.empty()) || (k + 1 < len && !p.trail.empty())) {
            clean = false;
            break;
          }
          if (k) key += ' ';
          key += text::ascii_lower(p.core);
        }
        if (!clean) continue;
        const auto hit = d.table.find(key);
        if (hit != d.table.end()) {
          matched = len;
          rep = hit->second;
        }
      }
      if (matched == 0) {
        const Piece& p = toks[i];
        out.push_back(convert_punct(p.lead, tgt_unspaced) + p.core +
                      convert_punct(p.trail, tgt_unspaced));
        ++i;
        continue;
      }
      out.push_back(convert_punct(toks[i].lead, tgt_unspaced) + carry_case(toks[i].core, rep) +
                    convert_punct(toks[i + matched - 1].trail, tgt_unspaced));
      i += matched;
    }
  } else {
    const std::u32string cps = text::decode_utf8(text);
    std::string run;
    for (std::size_t i = 0; i < cps.size();) {
      std::size_t matched = 0;
      const std::size_t longest = std::min(d.max_phrase, cps.size() - i);
      for (std::size_t len = longest; len >= 1; --len) {
        const auto hit = d.table.find(text::encode_utf8(cps.substr(i, len)));
        if (hit != d.table.end()) {
          if (!run.empty()) out.push_back(std::move(run)), run.clear();
          out.push_back(hit->second);
          matched = len;
          break;
        }
      }
      if (matched) {
        i += matched;
        continue;
      }
      if (!tgt_unspaced && text::is_space(cps[i])) {
        if (!run.empty()) out.push_back(std::move(run)), run.clear();
      } else {
        text::append_utf8(run, cps[i]);
      }
      ++i;
    }
    if (!run.empty()) out.push_back(std::move(run));
    if (!tgt_unspaced) {
      for (auto& p : out) p = convert_punct(p, false);
    }
  }

  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i && !tgt_unspaced) joined += ' ';
    joined += out[i];
  }
  if (!tgt_unspaced) {
    // Punctuation-only words attach to the preceding word.
    std::string fixed;
    for (const auto& w : text::split_whitespace(joined)) {
      const bool punct_only = std::all_of(w.begin(), w.end(), is_edge_punct);
      if (!fixed.empty() && !punct_only) fixed += ' ';
      fixed += w;
    }
    joined = fixed;
  }
  return joined;
}

// ---------------------------------------------------------------------------
// HttpClient

HttpClient::HttpClient(const std::string& endpoint, double rate_limit_rps, int timeout_seconds)
    : endpoint_(net::parse_endpoint(endpoint)),
      limiter_(rate_limit_rps),
      timeout_(timeout_seconds) {}

std::string HttpClient::translate(const std::string& text, const std::string& source,
                                  const std::string& target) const {
  limiter_.acquire();
  const json res = net::post_json(endpoint_, {{"text", text}, {"source", source}, {"target", target}},
                                  ErrorKind::TranslationFailure, timeout_);
  if (!res.is_object() || !res.contains("text") || !res["text"].is_string()) {
    throw Error(ErrorKind::TranslationFailure, "translation response without text field");
  }
  return res["text"].get<std::string>();
}

std::unique_ptr<TranslationClient> make_client(const std::string& backend,
                                               const std::string& endpoint,
                                               const fs::path& tables_dir, double rate_limit_rps) {
  if (backend == "mock-identity") return std::make_unique<IdentityClient>();
  if (backend == "mock-table") return std::make_unique<TableClient>(TableClient::load(tables_dir));
  if (backend == "http") {
    if (endpoint.empty()) throw Error(ErrorKind::InvalidArgument, "http backend needs an endpoint");
    return std::make_unique<HttpClient>(endpoint, rate_limit_rps);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown translation backend: " + backend);
}

// ---------------------------------------------------------------------------
// TranslationCache

namespace {
std::string cache_key(const std::string& s) { return text::hex64(text::fnv1a64(s)); }
}  // namespace

TranslationCache::TranslationCache(const fs::path& root, const std::string& backend,
                                   const PivotConfig& cfg)
    : path_(root / backend / (cfg.source_lang + "-" + cfg.pivot_lang + ".jsonl")) {
  if (!fs::exists(path_)) return;
  jsonl::for_each_line(path_, [&](const json& obj, const std::string& where) {
    jsonl::validate(obj, {{"h", jsonl::FieldType::String}, {"out", jsonl::FieldType::String}},
                    where);
    entries_[obj["h"]] = obj["out"];
  });
}

std::optional<std::string> TranslationCache::get(const std::string& text) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(cache_key(text));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TranslationCache::put(const std::string& text, const std::string& out) {
  std::lock_guard lock(mu_);
  const std::string h = cache_key(text);
  if (entries_.count(h)) return;
  entries_[h] = out;
  fs::create_directories(path_.parent_path());
  std::ofstream f(path_, std::ios::app | std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path_.string());
  f << json{{"h", h}, {"out", out}}.dump() << '\n';
}

std::size_t TranslationCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

namespace {

std::string translate_with_retries(const TranslationClient& client, const std::string& text,
                                   const std::string& source, const std::string& target,
                                   int retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      std::string out = client.translate(text, source, target);
      if (text::normalize_whitespace(out).empty()) {
        throw Error(ErrorKind::TranslationFailure, "empty translation " + source + "-" + target);
      }
      return out;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::TranslationFailure || attempt >= retries) throw;
    }
  }
}

}  // namespace

std::string back_translate(const std::string& text, const PivotConfig& cfg,
                           const TranslationClient& client, int retries) {
  cfg.validate();
  if (text::normalize_whitespace(text).empty()) {
    throw Error(ErrorKind::InvalidArgument, "back_translate needs nonempty text");
  }
  const std::string mid =
      translate_with_retries(client, text, cfg.source_lang, cfg.pivot_lang, retries);
  return translate_with_retries(client, mid, cfg.pivot_lang, cfg.source_lang, retries);
}

std::vector<LabeledSample> debias_dataset(const std::vector<LabeledSample>& samples,
                                          DebiasMode mode, const PivotConfig& cfg,
                                          const TranslationClient& client,
                                          const DebiasOptions& opts) {
  cfg.validate();
  for (const auto& s : samples) {
    if (to_string(s.lang) != cfg.source_lang) {
      throw Error(ErrorKind::LangMismatch,
                  "sample " + s.id + " is " + std::string(to_string(s.lang)) +
                      ", pivot source is " + cfg.source_lang);
    }
  }
  std::vector<LabeledSample> out = samples;
  if (mode == DebiasMode::None) return out;

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mode == DebiasMode::Both || out[i].label == 0) todo.push_back(i);
  }

  // Fresh round trips reach the cache afterwards in input order, so the cache
  // file does not depend on thread scheduling.
  std::vector<std::optional<std::string>> fresh(todo.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
      LabeledSample& s = out[todo[k]];
      std::optional<std::string> hit = opts.cache ? opts.cache->get(s.text) : std::nullopt;
      if (hit) {
        s.text = *hit;
        s.bt_applied = true;
        continue;
      }
      try {
        std::string rt = back_translate(s.text, cfg, client, opts.retries);
        fresh[k] = std::move(s.text);
        s.text = std::move(rt);
        s.bt_applied = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::TranslationFailure) throw;
        s.bt_applied = false;
        ++failures;
        log::warn("back-translation failed for " + s.id + ", keeping original: " + e.what());
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opts.parallelism, todo.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          next = todo.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  if (opts.cache) {
    for (std::size_t k = 0; k < todo.size(); ++k) {
      if (fresh[k]) opts.cache->put(*fresh[k], out[todo[k]].text);
    }
  }
  if (failures) {
    log::warn(std::to_string(failures.load()) + " of " + std::to_string(todo.size()) +
              " samples kept untranslated");
  }
  return out;
}

std::vector<StatementPair> translate_pairs(const std::vector<Statement>& statements,
                                           const TranslationClient& client, int retries,
                                           std::vector<std::string>* dropped) {
  std::vector<StatementPair> out;
  for (const Statement& s : statements) {
    if (text::normalize_whitespace(s.en_text).empty()) {
      throw Error(ErrorKind::InvalidArgument, "statement " + s.id + " has empty text");
    }
    try {
      out.push_back({s.id, s.en_text, translate_with_retries(client, s.en_text, "en", "cn", retries),
                     s.topic});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::TranslationFailure) throw;
      log::warn("dropping statement " + s.id + ": " + e.what());
      if (dropped) dropped->push_back(s.id);
    }
  }
  return out;
}

}  // namespace cdi::backtranslate
