#include "cdi/scoring.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace cdi::scoring {

namespace fs = std::filesystem;
using nlohmann::json;
using jsonl::FieldType;

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " outside [0, 1]");
  }
}

Lang culture_field(const json& obj, const std::string& key, const std::string& where) {
  try {
    return parse_lang(obj[key].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
  }
}

int binary_field(const json& obj, const std::string& key, const std::string& where) {
  const auto v = obj[key].get<std::int64_t>();
  if (v != 0 && v != 1) throw Error(ErrorKind::SchemaViolation, where + ": " + key + " must be 0 or 1");
  return static_cast<int>(v);
}

double unit_field(const json& obj, const std::string& key, const std::string& where, double lo = 0.0,
                  double hi = 1.0) {
  const double v = obj[key].get<double>();
  if (!(v >= lo && v <= hi)) throw Error(ErrorKind::SchemaViolation, where + ": " + key + " out of range");
  return v;
}

}  // namespace

ScorePair make_score_pair(const std::string& pair_id, double mp_en, double mp_cn) {
  check_unit(mp_en, "mp_en");
  check_unit(mp_cn, "mp_cn");
  return {pair_id, mp_en, mp_cn, mp_en - mp_cn};
}

ScorePair score_pair(const StatementPair& pair, const classifier::CultureModel& en_model,
                     const classifier::CultureModel& cn_model) {
  if (en_model.lang != Lang::En || cn_model.lang != Lang::Cn) {
    throw Error(ErrorKind::LangMismatch, "score_pair needs an en model and a cn model");
  }
  return make_score_pair(pair.pair_id, classifier::predict_score(en_model, pair.en_text, Lang::En),
                         classifier::predict_score(cn_model, pair.cn_text, Lang::Cn));
}

ScorePair score_pair(const StatementPair& pair, const classifier::Scorer& en_scorer,
                     const classifier::Scorer& cn_scorer) {
  return make_score_pair(pair.pair_id, classifier::external_score(en_scorer, pair.en_text),
                         classifier::external_score(cn_scorer, pair.cn_text));
}

double human_acceptance(const AnnotationSet& ann) {
  if (ann.judgments.empty()) {
    throw Error(ErrorKind::EmptyAnnotations, "no judgments for pair " + ann.pair_id);
  }
  std::size_t ones = 0;
  for (const auto& j : ann.judgments) ones += j.judgment == 1;
  return static_cast<double>(ones) / static_cast<double>(ann.judgments.size());
}

DifferenceRecord human_difference(const AnnotationSet& en_ann, const AnnotationSet& cn_ann) {
  if (en_ann.pair_id != cn_ann.pair_id) {
    throw Error(ErrorKind::PairMismatch, "pair ids differ: " + en_ann.pair_id + " vs " + cn_ann.pair_id);
  }
  if (en_ann.culture != Lang::En || cn_ann.culture != Lang::Cn) {
    throw Error(ErrorKind::PairMismatch, "expected en and cn annotations for " + en_ann.pair_id);
  }
  const double en = human_acceptance(en_ann);
  const double cn = human_acceptance(cn_ann);
  return {en_ann.pair_id, en, cn, en - cn};
}

int binarize(double score, double threshold) { return score > threshold ? 1 : 0; }

std::vector<AnnotationRow> read_annotations(const fs::path& path) {
  std::vector<AnnotationRow> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    jsonl::validate(obj,
                    {{"pair_id", FieldType::String},
                     {"culture", FieldType::String},
                     {"annotator_id", FieldType::String},
                     {"judgment", FieldType::Integer}},
                    where);
    out.push_back({obj["pair_id"], culture_field(obj, "culture", where), obj["annotator_id"],
                   binary_field(obj, "judgment", where)});
  });
  return out;
}

void write_annotations(const fs::path& path, const std::vector<AnnotationRow>& rows) {
  std::vector<json> lines;
  for (const auto& r : rows) {
    lines.push_back({{"pair_id", r.pair_id},
                     {"culture", to_string(r.culture)},
                     {"annotator_id", r.annotator_id},
                     {"judgment", r.judgment}});
  }
  jsonl::write_lines(path, lines);
}

std::vector<GoldItem> read_gold(const fs::path& path) {
  std::vector<GoldItem> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    jsonl::validate(obj, {{"pair_id", FieldType::String}, {"expected", FieldType::Integer}}, where);
    out.push_back({obj["pair_id"], binary_field(obj, "expected", where)});
  });
  return out;
}

void write_gold(const fs::path& path, const std::vector<GoldItem>& gold) {
  std::vector<json> lines;
  for (const auto& g : gold) lines.push_back({{"pair_id", g.pair_id}, {"expected", g.expected}});
  jsonl::write_lines(path, lines);
}

std::vector<AnnotationSet> group_annotations(const std::vector<AnnotationRow>& rows) {
  std::map<std::pair<std::string, Lang>, AnnotationSet> sets;
  std::set<std::tuple<std::string, Lang, std::string>> seen;
  for (const auto& r : rows) {
    if (!seen.insert({r.pair_id, r.culture, r.annotator_id}).second) {
      throw Error(ErrorKind::SchemaViolation, "annotator " + r.annotator_id + " judged " +
                                                  r.pair_id + " twice");
    }
    auto& s = sets[{r.pair_id, r.culture}];
    s.pair_id = r.pair_id;
    s.culture = r.culture;
    s.judgments.push_back({r.annotator_id, r.judgment});
  }
  std::vector<AnnotationSet> out;
  for (auto& [key, s] : sets) out.push_back(std::move(s));
  return out;
}

json to_json(const ScorePair& s) {
  return {{"pair_id", s.pair_id}, {"mp_en", s.mp_en}, {"mp_cn", s.mp_cn}, {"d_model", s.d_model}};
}

json to_json(const DifferenceRecord& d) {
  return {{"pair_id", d.pair_id}, {"ha_en", d.ha_en}, {"ha_cn", d.ha_cn}, {"d_human", d.d_human}};
}

std::vector<ScorePair> read_scores(const fs::path& path) {
  std::vector<ScorePair> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    jsonl::validate(obj,
                    {{"pair_id", FieldType::String},
                     {"mp_en", FieldType::Number},
                     {"mp_cn", FieldType::Number},
                     {"d_model", FieldType::Number}},
                    where);
    out.push_back({obj["pair_id"], unit_field(obj, "mp_en", where), unit_field(obj, "mp_cn", where),
                   unit_field(obj, "d_model", where, -1.0, 1.0)});
  });
  return out;
}

void write_scores(const fs::path& path, const std::vector<ScorePair>& scores) {
  std::vector<json> lines;
  for (const auto& s : scores) lines.push_back(to_json(s));
  jsonl::write_lines(path, lines);
}

std::vector<DifferenceRecord> read_human(const fs::path& path) {
  std::vector<DifferenceRecord> out;
  jsonl::for_each_line(path, [&](const json& obj, const std::string& where) {
    jsonl::validate(obj,
                    {{"pair_id", FieldType::String},
                     {"ha_en", FieldType::Number},
                     {"ha_cn", FieldType::Number},
                     {"d_human", FieldType::Number}},
                    where);
    out.push_back({obj["pair_id"], unit_field(obj, "ha_en", where), unit_field(obj, "ha_cn", where),
                   unit_field(obj, "d_human", where, -1.0, 1.0)});
  });
  return out;
}

void write_human(const fs::path& path, const std::vector<DifferenceRecord>& records) {
  std::vector<json> lines;
  for (const auto& d : records) lines.push_back(to_json(d));
  jsonl::write_lines(path, lines);
}

}  // namespace cdi::scoring
