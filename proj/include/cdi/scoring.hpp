#pragma once

// Machine and human cultural acceptance, and their cross-culture differences.

#include <filesystem>
#include <string>
#include <vector>

#include "cdi/classifier.hpp"
#include "cdi/statement.hpp"

namespace cdi::scoring {

// d_model = mp_en - mp_cn.
struct ScorePair {
  std::string pair_id;
  double mp_en = 0.0;
  double mp_cn = 0.0;
  double d_model = 0.0;

  bool operator==(const ScorePair&) const = default;
};

struct Judgment {
  std::string annotator_id;
  int judgment = 0;  // 0 or 1

  bool operator==(const Judgment&) const = default;
};

// One culture's judgments of one pair.
struct AnnotationSet {
  std::string pair_id;
  Lang culture = Lang::En;
  std::vector<Judgment> judgments;

  bool operator==(const AnnotationSet&) const = default;
};

// d_human = ha_en - ha_cn.
struct DifferenceRecord {
  std::string pair_id;
  double ha_en = 0.0;
  double ha_cn = 0.0;
  double d_human = 0.0;

  bool operator==(const DifferenceRecord&) const = default;
};

// Throws InvalidArgument when a score lies outside [0, 1].
ScorePair make_score_pair(const std::string& pair_id, double mp_en, double mp_cn);

// Throws LangMismatch unless the models are English and Chinese respectively.
ScorePair score_pair(const StatementPair& pair, const classifier::CultureModel& en_model,
                     const classifier::CultureModel& cn_model);
ScorePair score_pair(const StatementPair& pair, const classifier::Scorer& en_scorer,
                     const classifier::Scorer& cn_scorer);

// Share of judgments equal to 1. Throws EmptyAnnotations.
double human_acceptance(const AnnotationSet& ann);

// Throws PairMismatch when the sets disagree on pair_id or are not en/cn.
DifferenceRecord human_difference(const AnnotationSet& en_ann, const AnnotationSet& cn_ann);

// 1 iff score > threshold.
int binarize(double score, double threshold);

// annotations.jsonl: {"pair_id","culture","annotator_id","judgment"}.
struct AnnotationRow {
  std::string pair_id;
  Lang culture = Lang::En;
  std::string annotator_id;
  int judgment = 0;

  bool operator==(const AnnotationRow&) const = default;
};

// gold.jsonl: {"pair_id","expected"}, attention items with a known answer.
struct GoldItem {
  std::string pair_id;
  int expected = 0;

  bool operator==(const GoldItem&) const = default;
};

std::vector<AnnotationRow> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRow>& rows);
std::vector<GoldItem> read_gold(const std::filesystem::path& path);
void write_gold(const std::filesystem::path& path, const std::vector<GoldItem>& gold);

// Sets ordered by (pair_id, culture); judgments in input order. Throws
// SchemaViolation when an annotator judges the same pair twice.
std::vector<AnnotationSet> group_annotations(const std::vector<AnnotationRow>& rows);

nlohmann::json to_json(const ScorePair& s);
nlohmann::json to_json(const DifferenceRecord& d);
std::vector<ScorePair> read_scores(const std::filesystem::path& path);
void write_scores(const std::filesystem::path& path, const std::vector<ScorePair>& scores);
std::vector<DifferenceRecord> read_human(const std::filesystem::path& path);
void write_human(const std::filesystem::path& path, const std::vector<DifferenceRecord>& records);

}  // namespace cdi::scoring
