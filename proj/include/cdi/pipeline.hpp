#pragma once

// Stage commands over a shared configuration and a fixed working-directory
// layout.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdi/backtranslate.hpp"
#include "cdi/classifier.hpp"
#include "cdi/corpus.hpp"
#include "cdi/evaluation.hpp"
#include "cdi/scoring.hpp"
#include "cdi/statement.hpp"

namespace cdi::pipeline {

using backtranslate::DebiasMode;

struct IngestConfig {
  std::string source_mode = "fixture";  // fixture | mediawiki
  std::map<Lang, std::filesystem::path> fixture_dir;
  std::map<Lang, std::string> endpoint;
  std::map<Lang, std::vector<std::string>> roots;
  std::string category_prefix = "Category:";
  int max_depth = 2;
  std::size_t article_cap = 1;
  double rate_limit_rps = 1.0;
  std::map<Lang, std::size_t> min_len;  // absent: language default
  std::map<Lang, std::size_t> max_len;
  int retries = 2;
  std::size_t skip_budget = 10;  // tolerated FetchFailure skips per run
};

struct FabricateConfig {
  std::size_t colloc_threshold = 10;
  std::optional<std::uint64_t> seed;
};

struct DebiasConfig {
  std::string backend = "mock-table";
  std::string endpoint;
  double rate_limit_rps = 1.0;
  DebiasMode mode = DebiasMode::Both;
  std::map<Lang, std::string> pivot;  // absent: de for en, ja for cn
  std::filesystem::path tables_dir;
  std::filesystem::path cache_dir;    // empty: <work>/btcache
  std::size_t parallelism = 1;
  int retries = 2;
};

struct ScoreConfig {
  std::string scorer = "model";  // model | stdio | http
  std::map<Lang, std::string> command;
  std::string endpoint;  // culture scorer at <endpoint>/<lang>
  double rate_limit_rps = 0.0;
};

struct EvaluateConfig {
  std::size_t permutations = 10000;
  std::optional<std::uint64_t> perm_seed;
  double min_gold_pass = 0.8;
  double min_loo_corr = 0.0;
  std::string baseline = "cdi";  // random | lm | weak-cdi | cdi
  double test_fraction = 0.2;
  std::string lm_endpoint;  // empty: unigram model over the ingested corpus
};

struct PipelineConfig {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::filesystem::path work_dir;
  std::filesystem::path resources_dir;
  std::filesystem::path statements;
  std::filesystem::path annotations;
  std::filesystem::path gold;
  IngestConfig ingest;
  FabricateConfig fabricate;
  DebiasConfig debias;
  classifier::TrainConfig train;
  bool train_seed_set = false;
  ScoreConfig score;
  EvaluateConfig evaluate;
};

// Relative paths resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& obj, const std::filesystem::path& base_dir);

// Reads the file, then applies CDI_MT_ENDPOINT (switches the translation
// backend to http) and CDI_SCORER_ENDPOINT (switches scoring to http).
PipelineConfig load_config(const std::filesystem::path& path);

// Stage seed: the explicit per-stage seed if configured, otherwise
// derive_seed(global, stage).
std::uint64_t stage_seed(const PipelineConfig& cfg, std::string_view stage);

backtranslate::PivotConfig pivot_for(const PipelineConfig& cfg, Lang lang);

// Working-directory layout.
std::filesystem::path sentences_path(const PipelineConfig& cfg, Lang lang);
std::filesystem::path manifest_path(const PipelineConfig& cfg, Lang lang);
std::filesystem::path samples_path(const PipelineConfig& cfg, Lang lang);
std::filesystem::path debiased_path(const PipelineConfig& cfg, Lang lang, DebiasMode mode);
std::filesystem::path model_path(const PipelineConfig& cfg, Lang lang, DebiasMode mode);
std::filesystem::path pairs_path(const PipelineConfig& cfg);
std::filesystem::path scores_path(const PipelineConfig& cfg, DebiasMode mode);
std::filesystem::path human_path(const PipelineConfig& cfg);
std::filesystem::path report_path(const PipelineConfig& cfg, const std::string& baseline);
std::filesystem::path table3_path(const PipelineConfig& cfg);
std::filesystem::path scatter_path(const PipelineConfig& cfg);
std::filesystem::path topic_corr_path(const PipelineConfig& cfg);
std::filesystem::path cache_root(const PipelineConfig& cfg);

struct IngestSummary {
  std::size_t topics = 0;
  std::size_t articles = 0;
  std::size_t sentences = 0;
  std::size_t skipped = 0;
};
IngestSummary cmd_ingest(const PipelineConfig& cfg, Lang lang);

struct FabricateSummary {
  std::size_t sentences = 0;
  std::size_t negatives = 0;
  std::size_t samples = 0;
};
FabricateSummary cmd_fabricate(const PipelineConfig& cfg, Lang lang);

// Writes the `mode` variant of the balanced samples.
std::size_t cmd_debias(const PipelineConfig& cfg, Lang lang, DebiasMode mode);
// Translates the English statements into pairs.jsonl; returns dropped ids.
std::vector<std::string> cmd_translate_statements(const PipelineConfig& cfg,
                                                  const std::filesystem::path& statements);

classifier::CultureModel cmd_train(const PipelineConfig& cfg, Lang lang, DebiasMode mode);

std::vector<scoring::ScorePair> cmd_score(const PipelineConfig& cfg, DebiasMode mode);

// Annotator filtering and human acceptance over the non-gold pairs; writes
// human.jsonl.
struct HumanSide {
  std::vector<scoring::DifferenceRecord> records;
  std::map<Lang, std::vector<std::string>> retained;
  std::map<Lang, evaluation::AnnotatorMatrix> matrices;  // retained rows only
};
HumanSide cmd_human(const PipelineConfig& cfg);

evaluation::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& baseline);

// Train/test grid per language on the balanced samples; writes table3.json.
std::map<Lang, evaluation::MatrixResult> cmd_matrix(const PipelineConfig& cfg,
                                                    const std::vector<Lang>& langs);

struct ScatterRecord {
  std::string pair_id;
  std::string topic;
  double x = 0.0;  // mp_en
  double y = 0.0;  // mp_cn

  bool operator==(const ScatterRecord&) const = default;
};

// One record per scored pair whose topic is in `topics` (all when empty),
// in score order. Throws UnknownTopic for a filter entry no pair carries,
// PairMismatch for a score without a pair.
std::vector<ScatterRecord> scatter_records(const std::vector<scoring::ScorePair>& scores,
                                           const std::vector<StatementPair>& pairs,
                                           const std::vector<std::string>& topics);

struct TopicCorrelation {
  std::size_t n = 0;
  std::optional<double> pearson;  // empty when degenerate
};

std::map<std::string, TopicCorrelation> topic_correlations(
    const std::vector<ScatterRecord>& records);

nlohmann::json to_json(const ScatterRecord& r);

void cmd_plotdata(const PipelineConfig& cfg, DebiasMode mode, const std::vector<std::string>& topics);

}  // namespace cdi::pipeline
