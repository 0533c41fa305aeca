#include "cdi/fabrication.hpp"

#include <algorithm>
#include <fstream>

#include "cdi/rng.hpp"

namespace cdi::fabrication {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer::Tokenizer(Lang lang, std::set<std::string> lexicon)
    : lang_(lang), lexicon_(std::move(lexicon)) {
  for (const std::string& w : lexicon_) {
    max_word_len_ = std::max(max_word_len_, text::code_point_count(w));
  }
}

namespace {

bool is_word_char(char32_t cp) {
  return text::is_ascii_alnum(cp) || (cp >= 0xC0 && cp < 0x2000 && !text::is_space(cp));
}

}  // namespace

std::vector<Token> Tokenizer::tokens(std::string_view sentence) const {
  const std::u32string cps = text::decode_utf8(sentence);
  std::vector<Token> out;
  std::size_t i = 0;
  if (lang_ == Lang::En) {
    while (i < cps.size()) {
      if (!is_word_char(cps[i])) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < cps.size()) {
        if (is_word_char(cps[j])) {
          ++j;
        } else if ((cps[j] == U'\'' || cps[j] == 0x2019) && j + 1 < cps.size() &&
                   is_word_char(cps[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      Token t;
      t.start = i;
      t.end = j;
      t.surface = text::encode_utf8(std::u32string_view(cps).substr(i, j - i));
      t.norm = text::ascii_lower(t.surface);
      t.in_lexicon = lexicon_.count(t.norm) > 0;
      out.push_back(std::move(t));
      i = j;
    }
    return out;
  }

  while (i < cps.size()) {
    if (text::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t len = std::min(max_word_len_, cps.size() - i);
    Token t;
    for (; len >= 1; --len) {
      const std::string cand = text::encode_utf8(std::u32string_view(cps).substr(i, len));
      if (lexicon_.count(cand)) {
        t.surface = cand;
        t.in_lexicon = true;
        break;
      }
    }
    if (!t.in_lexicon) {
      len = 1;
      t.surface = text::encode_utf8(std::u32string_view(cps).substr(i, 1));
    }
    t.start = i;
    t.end = i + len;
    t.norm = t.surface;
    out.push_back(std::move(t));
    i += len;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexicons

AntonymLexicon::AntonymLexicon(Lang lang, std::map<std::string, std::vector<std::string>> entries,
                               bool symmetric)
    : lang_(lang), entries_(std::move(entries)), symmetric_(symmetric) {
  for (const auto& [lemma, ants] : entries_) {
    if (ants.empty()) {
      throw Error(ErrorKind::InvalidArgument, "antonym entry without antonyms: " + lemma);
    }
    if (std::find(ants.begin(), ants.end(), lemma) != ants.end()) {
      throw Error(ErrorKind::InvalidArgument, "lemma maps to itself: " + lemma);
    }
  }
  if (!symmetric_) return;
  for (const auto& [lemma, ants] : entries_) {
    for (const std::string& a : ants) {
      const auto* back = antonyms(a);
      if (!back || std::find(back->begin(), back->end(), lemma) == back->end()) {
        throw Error(ErrorKind::InvalidArgument,
                    "symmetric lexicon lacks " + a + " -> " + lemma);
      }
    }
  }
}

AntonymLexicon AntonymLexicon::load(const fs::path& path, Lang lang, bool symmetric) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::map<std::string, std::vector<std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    std::string lemma = lang == Lang::En ? text::ascii_lower(line.substr(0, tab))
                                         : line.substr(0, tab);
    auto& ants = entries[lemma];
    std::string rest = line.substr(tab + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      std::string a = text::normalize_whitespace(
          rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (lang == Lang::En) a = text::ascii_lower(a);
      if (!a.empty() && std::find(ants.begin(), ants.end(), a) == ants.end()) ants.push_back(a);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  return AntonymLexicon(lang, std::move(entries), symmetric);
}

const std::vector<std::string>* AntonymLexicon::antonyms(const std::string& lemma) const {
  const auto it = entries_.find(lemma);
  return it == entries_.end() ? nullptr : &it->second;
}

LexiconTagger LexiconTagger::load(const fs::path& path, Lang lang) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    line = text::normalize_whitespace(line);
    if (line.empty() || line[0] == '#') continue;
    words.insert(lang == Lang::En ? text::ascii_lower(line) : line);
  }
  return LexiconTagger(Tokenizer(lang, std::move(words)));
}

std::vector<AdjectiveSpan> LexiconTagger::adjectives(std::string_view sentence) const {
  std::vector<AdjectiveSpan> out;
  for (const Token& t : tokenizer_.tokens(sentence)) {
    if (t.in_lexicon) out.push_back({t.start, t.end, t.surface, t.norm});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Collocations

CollocationModel::CollocationModel(Tokenizer tokenizer, std::size_t freq_threshold)
    : tokenizer_(std::move(tokenizer)), threshold_(freq_threshold) {}

CollocationModel CollocationModel::build(const std::vector<std::string>& sentences,
                                         Tokenizer tokenizer, std::size_t freq_threshold,
                                         const std::vector<Bigram>& stoplist) {
  CollocationModel model(std::move(tokenizer), freq_threshold);
  std::map<Bigram, std::size_t> counts;
  for (const std::string& s : sentences) {
    const auto toks = model.tokenizer_.tokens(s);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      if (toks[i].in_lexicon || toks[i + 1].in_lexicon) ++counts[{toks[i].norm, toks[i + 1].norm}];
    }
  }
  for (const auto& [bigram, count] : counts) model.add_count(bigram, count);
  for (const Bigram& b : stoplist) model.protect(b);
  return model;
}

std::vector<Bigram> CollocationModel::load_stoplist(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<Bigram> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    const auto parts = text::split_whitespace(line);
    if (parts.size() != 2) continue;
    out.emplace_back(text::ascii_lower(parts[0]), text::ascii_lower(parts[1]));
  }
  return out;
}

void CollocationModel::add_count(const Bigram& bigram, std::size_t count) {
  const std::size_t total = counts_[bigram] += count;
  if (total >= threshold_) protected_.insert(bigram);
}

void CollocationModel::protect(const Bigram& bigram) { protected_.insert(bigram); }

// ---------------------------------------------------------------------------
// Guards

std::vector<AdjectiveSpan> tag_adjectives(std::string_view sentence, const PosTagger& tagger) {
  if (text::normalize_whitespace(sentence).empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty sentence");
  }
  std::vector<AdjectiveSpan> spans = tagger.adjectives(sentence);
  std::sort(spans.begin(), spans.end(),
            [](const AdjectiveSpan& a, const AdjectiveSpan& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].end) {
      throw Error(ErrorKind::TaggerFailure, "overlapping adjective spans");
    }
  }
  return spans;
}

namespace {

std::size_t find_token(const std::vector<Token>& toks, const AdjectiveSpan& span) {
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].start == span.start && toks[i].end == span.end) return i;
  }
  return toks.size();
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Chinese pairs are matched on the surrounding text: the neighbour word of a
// listed pair (自由女神) is usually not a lexicon token.
bool cn_adjacent_pair(std::string_view sentence, const AdjectiveSpan& span, const std::string& word,
                      const CollocationModel& model) {
  const std::string before = text::slice(sentence, 0, span.start);
  const std::string after = text::slice(sentence, span.end, text::code_point_count(sentence));
  for (const auto& [w1, w2] : model.protected_bigrams()) {
    if (w1 == word && after.rfind(w2, 0) == 0) return true;
    if (w2 == word && before.size() >= w1.size() &&
        before.compare(before.size() - w1.size(), w1.size(), w1) == 0) {
      return true;
    }
  }
  return false;
}

bool is_year_or_decade(std::string_view tok) {
  if (tok.size() == 4 && all_digits(tok)) return true;
  if (tok.size() >= 2 && tok.back() == 's') {
    std::string_view head = tok.substr(0, tok.size() - 1);
    if (!head.empty() && head.back() == '\'') head.remove_suffix(1);
    return all_digits(head);
  }
  return false;
}

bool is_ordinal(std::string_view tok) {
  if (tok.size() < 3) return false;
  const std::string_view suffix = tok.substr(tok.size() - 2);
  return (suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th") &&
         all_digits(tok.substr(0, tok.size() - 2));
}

bool is_numeral(char32_t cp) {
  static const std::u32string kCjkDigits = U"〇零一二三四五六七八九十百千";
  return (cp >= U'0' && cp <= U'9') || (cp >= 0xFF10 && cp <= 0xFF19) ||
         kCjkDigits.find(cp) != std::u32string::npos;
}

}  // namespace

bool is_protected(std::string_view sentence, const AdjectiveSpan& span,
                  const CollocationModel& model) {
  if (model.tokenizer().lang() == Lang::Cn) return cn_adjacent_pair(sentence, span, span.surface, model);
  const auto toks = model.tokenizer().tokens(sentence);
  const std::size_t i = find_token(toks, span);
  if (i == toks.size()) return false;
  if (i > 0 && model.contains({toks[i - 1].norm, toks[i].norm})) return true;
  if (i + 1 < toks.size() && model.contains({toks[i].norm, toks[i + 1].norm})) return true;
  return false;
}

bool is_temporal(std::string_view sentence, const AdjectiveSpan& span, Lang lang) {
  if (lang == Lang::En) {
    const std::string lemma = text::ascii_lower(span.surface);
    if (lemma != "early" && lemma != "late" && lemma != "mid") return false;
    const Tokenizer tok(Lang::En, {});
    const auto toks = tok.tokens(sentence);
    const std::size_t i = find_token(toks, span);
    if (i == toks.size()) return false;
    if (i + 1 < toks.size()) {
      const std::string& next = toks[i + 1].norm;
      if (is_year_or_decade(next)) return true;
      if (is_ordinal(next) && i + 2 < toks.size() &&
          (toks[i + 2].norm == "century" || toks[i + 2].norm == "centuries")) {
        return true;
      }
    }
    return lemma != "mid" && i > 0 && is_year_or_decade(toks[i - 1].norm);
  }

  static const std::set<std::string> kTemporalCn = {"早期", "晚期", "中期", "初期", "末期",
                                                    "初",   "末",   "中叶", "前期", "后期"};
  if (!kTemporalCn.count(span.surface)) return false;
  const std::u32string cps = text::decode_utf8(sentence);
  // Preceded by a numeral with an optional era suffix: 1850年代早期, 19世纪初.
  std::u32string before = cps.substr(0, span.start);
  for (const std::u32string suffix : {U"年代", U"世纪", U"年"}) {
    if (before.size() >= suffix.size() &&
        before.compare(before.size() - suffix.size(), suffix.size(), suffix) == 0) {
      before.resize(before.size() - suffix.size());
      break;
    }
  }
  if (!before.empty() && is_numeral(before.back())) return true;
  return span.end < cps.size() && is_numeral(cps[span.end]);
}

// ---------------------------------------------------------------------------
// Fabrication

namespace {

// The flip must not create a protected pair either ("old york" -> "new york").
bool creates_protected(std::string_view sentence, const AdjectiveSpan& span,
                       const std::string& replacement, const CollocationModel& colloc) {
  if (colloc.tokenizer().lang() == Lang::Cn) return cn_adjacent_pair(sentence, span, replacement, colloc);
  const auto toks = colloc.tokenizer().tokens(sentence);
  const std::size_t i = find_token(toks, span);
  if (i == toks.size()) return false;
  const std::string norm =
      colloc.tokenizer().lang() == Lang::En ? text::ascii_lower(replacement) : replacement;
  return (i > 0 && colloc.contains({toks[i - 1].norm, norm})) ||
         (i + 1 < toks.size() && colloc.contains({norm, toks[i + 1].norm}));
}

}  // namespace

std::string apply_flip(std::string_view text, const FlippedSpan& span) {
  const std::size_t b = text::byte_offset(text, span.start);
  const std::size_t e = text::byte_offset(text, span.end);
  std::string out(text.substr(0, b));
  out += span.replacement;
  out += text.substr(e);
  return out;
}

std::string match_case(std::string_view surface, std::string_view replacement) {
  std::string out(replacement);
  if (!surface.empty() && !out.empty() && surface[0] >= 'A' && surface[0] <= 'Z' &&
      out[0] >= 'a' && out[0] <= 'z') {
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  }
  return out;
}

LabeledSample positive_sample(const corpus::RawSentence& sentence) {
  LabeledSample s;
  s.id = sentence.id;
  s.lang = sentence.lang;
  s.text = sentence.text;
  s.label = 1;
  s.origin = Origin::Wiki;
  return s;
}

std::vector<LabeledSample> fabricate_negatives(const corpus::RawSentence& sentence,
                                               const AntonymLexicon& lexicon,
                                               const CollocationModel& colloc,
                                               const PosTagger& tagger) {
  if (sentence.lang != lexicon.lang()) {
    throw Error(ErrorKind::LangMismatch, "sentence " + sentence.id + " is " +
                                             std::string(to_string(sentence.lang)) +
                                             ", lexicon is " +
                                             std::string(to_string(lexicon.lang())));
  }
  std::vector<AdjectiveSpan> spans;
  try {
    spans = tag_adjectives(sentence.text, tagger);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) return {};
    throw Error(ErrorKind::TaggerFailure, sentence.id + ": " + e.what());
  }

  std::vector<LabeledSample> out;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const AdjectiveSpan& span = spans[k];
    const auto* ants = lexicon.antonyms(span.lemma);
    if (!ants) continue;
    if (is_protected(sentence.text, span, colloc)) continue;
    if (is_temporal(sentence.text, span, sentence.lang)) continue;
    const std::string replacement = match_case(span.surface, ants->front());
    if (creates_protected(sentence.text, span, replacement, colloc)) continue;

    LabeledSample neg;
    neg.id = sentence.id + "-n" + std::to_string(k);
    neg.lang = sentence.lang;
    neg.label = 0;
    neg.origin = Origin::AntonymFlip;
    neg.parent_id = sentence.id;
    neg.flipped_span = FlippedSpan{span.start, span.end, replacement};
    neg.text = apply_flip(sentence.text, *neg.flipped_span);
    out.push_back(std::move(neg));
  }
  return out;
}

std::vector<LabeledSample> balance_dataset(
    const std::vector<LabeledSample>& positives,
    const std::map<std::string, std::vector<LabeledSample>>& negatives_by_parent,
    std::uint64_t seed) {
  std::set<std::string> positive_ids;
  for (const LabeledSample& p : positives) positive_ids.insert(p.id);
  for (const auto& [parent, negs] : negatives_by_parent) {
    if (!negs.empty() && !positive_ids.count(parent)) {
      throw Error(ErrorKind::InvalidArgument, "negatives for unknown parent " + parent);
    }
  }

  Rng rng(seed);
  std::vector<LabeledSample> out;
  for (const LabeledSample& p : positives) {
    const auto it = negatives_by_parent.find(p.id);
    if (it == negatives_by_parent.end() || it->second.empty()) continue;
    out.push_back(p);
    out.push_back(it->second[rng.below(it->second.size())]);
  }
  if (out.empty()) throw Error(ErrorKind::EmptyDataset, "no positive has a negative");
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const LabeledSample& s) {
  json span = nullptr;
  if (s.flipped_span) {
    span = json::array({s.flipped_span->start, s.flipped_span->end, s.flipped_span->replacement});
  }
  return {{"id", s.id},
          {"lang", to_string(s.lang)},
          {"text", s.text},
          {"label", s.label},
          {"origin", s.origin == Origin::Wiki ? "wiki" : "antonym-flip"},
          {"parent_id", s.parent_id ? json(*s.parent_id) : json(nullptr)},
          {"flipped_span", span},
          {"bt_applied", s.bt_applied}};
}

LabeledSample sample_from_json(const json& obj, const std::string& where) {
  using jsonl::FieldType;
  jsonl::validate(obj,
                  {{"id", FieldType::String},
                   {"lang", FieldType::String},
                   {"text", FieldType::String},
                   {"label", FieldType::Integer},
                   {"origin", FieldType::String},
                   {"parent_id", FieldType::String, true},
                   {"flipped_span", FieldType::Array, true},
                   {"bt_applied", FieldType::Boolean}},
                  where);
  auto fail = [&](const std::string& msg) { return Error(ErrorKind::SchemaViolation, where + ": " + msg); };
  LabeledSample s;
  s.id = obj["id"];
  const std::string lang = obj["lang"];
  if (lang != "en" && lang != "cn") throw fail("bad lang");
  s.lang = parse_lang(lang);
  s.text = obj["text"];
  if (text::normalize_whitespace(s.text).empty()) throw fail("empty text");
  s.label = obj["label"];
  const std::string origin = obj["origin"];
  if (origin == "wiki") {
    s.origin = Origin::Wiki;
  } else if (origin == "antonym-flip") {
    s.origin = Origin::AntonymFlip;
  } else {
    throw fail("bad origin '" + origin + "'");
  }
  if (!obj["parent_id"].is_null()) s.parent_id = obj["parent_id"].get<std::string>();
  const json& span = obj["flipped_span"];
  if (!span.is_null()) {
    if (span.size() != 3 || !span[0].is_number_unsigned() || !span[1].is_number_unsigned() ||
        !span[2].is_string()) {
      throw fail("flipped_span must be [start, end, replacement]");
    }
    s.flipped_span = FlippedSpan{span[0].get<std::size_t>(), span[1].get<std::size_t>(),
                                 span[2].get<std::string>()};
  }
  s.bt_applied = obj["bt_applied"];
  const bool pos_ok = s.label == 1 && s.origin == Origin::Wiki && !s.flipped_span;
  const bool neg_ok = s.label == 0 && s.origin == Origin::AntonymFlip && s.flipped_span;
  if (!pos_ok && !neg_ok) throw fail("label/origin/flipped_span are inconsistent");
  return s;
}

std::vector<LabeledSample> read_samples(const fs::path& path) {
  std::vector<LabeledSample> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    out.push_back(sample_from_json(obj, where));
  });
  return out;
}

void write_samples(const fs::path& path, const std::vector<LabeledSample>& samples) {
  std::vector<json> rows;
  rows.reserve(samples.size());
  for (const LabeledSample& s : samples) rows.push_back(to_json(s));
  jsonl::write_lines(path, rows);
}

}  // namespace cdi::fabrication
