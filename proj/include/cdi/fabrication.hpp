#pragma once

// Positive/negative sample construction by antonym substitution.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdi/corpus.hpp"
#include "cdi/jsonl.hpp"
#include "cdi/text.hpp"

namespace cdi::fabrication {

// Offsets are code point indices into the sentence, end exclusive.
struct AdjectiveSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string lemma;

  bool operator==(const AdjectiveSpan&) const = default;
};

struct Token {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string norm;  // lowercased for English
  bool in_lexicon = false;
};

// English: maximal runs of ASCII letters, digits and apostrophes. Chinese:
// longest match against `lexicon`, every other non-space character is a token.
class Tokenizer {
 public:
  Tokenizer(Lang lang, std::set<std::string> lexicon);

  std::vector<Token> tokens(std::string_view sentence) const;
  Lang lang() const { return lang_; }
  const std::set<std::string>& lexicon() const { return lexicon_; }

 private:
  Lang lang_;
  std::set<std::string> lexicon_;
  std::size_t max_word_len_ = 1;
};

class AntonymLexicon {
 public:
  AntonymLexicon(Lang lang, std::map<std::string, std::vector<std::string>> entries,
                 bool symmetric = false);

  // `lemma<TAB>antonym[,antonym...]` per line; '#' starts a comment.
  static AntonymLexicon load(const std::filesystem::path& path, Lang lang,
                             bool symmetric = false);

  const std::vector<std::string>* antonyms(const std::string& lemma) const;
  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }
  Lang lang() const { return lang_; }
  bool symmetric() const { return symmetric_; }

 private:
  Lang lang_;
  std::map<std::string, std::vector<std::string>> entries_;
  bool symmetric_;
};

// Part-of-speech contract: returns the adjective spans of a sentence.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<AdjectiveSpan> adjectives(std::string_view sentence) const = 0;
};

// Marks every token found in a bundled adjective word list.
class LexiconTagger : public PosTagger {
 public:
  explicit LexiconTagger(Tokenizer tokenizer) : tokenizer_(std::move(tokenizer)) {}

  // One adjective per line.
  static LexiconTagger load(const std::filesystem::path& path, Lang lang);

  std::vector<AdjectiveSpan> adjectives(std::string_view sentence) const override;
  const Tokenizer& tokenizer() const { return tokenizer_; }

 private:
  Tokenizer tokenizer_;
};

using Bigram = std::pair<std::string, std::string>;

class CollocationModel {
 public:
  CollocationModel(Tokenizer tokenizer, std::size_t freq_threshold);

  // Counts every bigram that touches a lexicon word and protects those seen
  // at least `freq_threshold` times, plus every stoplist entry.
  static CollocationModel build(const std::vector<std::string>& sentences, Tokenizer tokenizer,
                                std::size_t freq_threshold,
                                const std::vector<Bigram>& stoplist = {});

  // `w1<TAB>w2` (or whitespace separated) per line.
  static std::vector<Bigram> load_stoplist(const std::filesystem::path& path);

  void add_count(const Bigram& bigram, std::size_t count);
  void protect(const Bigram& bigram);

  bool contains(const Bigram& bigram) const { return protected_.count(bigram) > 0; }
  const std::set<Bigram>& protected_bigrams() const { return protected_; }
  const std::map<Bigram, std::size_t>& bigram_counts() const { return counts_; }
  std::size_t freq_threshold() const { return threshold_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }

 private:
  Tokenizer tokenizer_;
  std::size_t threshold_;
  std::map<Bigram, std::size_t> counts_;
  std::set<Bigram> protected_;
};

enum class Origin { Wiki, AntonymFlip };

struct FlippedSpan {
  std::size_t start = 0;  // in the parent text
  std::size_t end = 0;
  std::string replacement;

  bool operator==(const FlippedSpan&) const = default;
};

struct LabeledSample {
  std::string id;
  Lang lang = Lang::En;
  std::string text;
  int label = 1;
  Origin origin = Origin::Wiki;
  std::optional<std::string> parent_id;
  std::optional<FlippedSpan> flipped_span;
  bool bt_applied = false;

  bool operator==(const LabeledSample&) const = default;
};

std::vector<AdjectiveSpan> tag_adjectives(std::string_view sentence, const PosTagger& tagger);

bool is_protected(std::string_view sentence, const AdjectiveSpan& span,
                  const CollocationModel& model);

// early/late/mid next to a year, decade or century ("in the early 1850s").
bool is_temporal(std::string_view sentence, const AdjectiveSpan& span, Lang lang);

// `text` with code points [span.start, span.end) replaced.
std::string apply_flip(std::string_view text, const FlippedSpan& span);

// Replacement with the first character's case carried over from `surface`.
std::string match_case(std::string_view surface, std::string_view replacement);

LabeledSample positive_sample(const corpus::RawSentence& sentence);

// One negative per eligible adjective: tagged, has an antonym, not protected,
// not temporal. Each negative flips exactly one span to its first antonym.
std::vector<LabeledSample> fabricate_negatives(const corpus::RawSentence& sentence,
                                               const AntonymLexicon& lexicon,
                                               const CollocationModel& colloc,
                                               const PosTagger& tagger);

// Keeps positives with at least one negative and pairs each with one
// uniformly drawn negative. Output alternates positive, negative.
std::vector<LabeledSample> balance_dataset(
    const std::vector<LabeledSample>& positives,
    const std::map<std::string, std::vector<LabeledSample>>& negatives_by_parent,
    std::uint64_t seed);

nlohmann::json to_json(const LabeledSample& s);
LabeledSample sample_from_json(const nlohmann::json& obj, const std::string& where);
std::vector<LabeledSample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, const std::vector<LabeledSample>& samples);

}  // namespace cdi::fabrication
