#pragma once

// Correlations with permutation p-values, binary accuracy, annotator
// agreement and filtering, baselines, and the debias train/test grid.

#include <array>
#include <map>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdi/backtranslate.hpp"
#include "cdi/classifier.hpp"
#include "cdi/scoring.hpp"

namespace cdi::evaluation {

enum class CorrKind { Pearson, Spearman };
std::string_view to_string(CorrKind kind);

struct CorrelationResult {
  CorrKind kind = CorrKind::Pearson;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

struct PermutationConfig {
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
};

// Sample Pearson r. Throws LengthMismatch, or DegenerateInput for n < 2 or
// a zero-variance input.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);
// 1-based ranks, ties get the mean of their positions.
std::vector<double> fractional_ranks(const std::vector<double>& v);
double spearman_r(const std::vector<double>& x, const std::vector<double>& y);

// Two-sided: p = (1 + #{|r_perm| >= |r_obs|}) / (P + 1), where y is
// shuffled P times by a generator seeded with cfg.seed. Ties within 1e-12
// count as exceeding.
CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y,
                          const PermutationConfig& cfg = {});
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           const PermutationConfig& cfg = {});
CorrelationResult correlate(CorrKind kind, const std::vector<double>& x,
                            const std::vector<double>& y, const PermutationConfig& cfg = {});

// Share of i with binarize(pred_i, t) == binarize(truth_i, t).
double binary_accuracy(const std::vector<double>& pred, const std::vector<double>& truth,
                       double threshold);

// Judgments of one culture as a rectangle: rows annotators (sorted by id),
// columns pairs (sorted by id).
struct AnnotatorMatrix {
  std::vector<std::string> annotators;
  std::vector<std::string> pair_ids;
  std::vector<std::vector<double>> judgments;  // [annotator][pair]

  AnnotatorMatrix select(const std::vector<std::string>& annotator_ids) const;
};

// Throws InvalidArgument when some annotator skipped some pair, EmptyAnnotations
// when nothing is left. Pairs in `exclude` are left out.
AnnotatorMatrix build_matrix(const std::vector<scoring::AnnotationSet>& sets, Lang culture,
                             const std::vector<std::string>& exclude = {});

// Correlation of row `i` against the column means of the other rows. Throws
// DegenerateInput when either vector is constant.
double loo_correlation(const AnnotatorMatrix& m, std::size_t i, CorrKind kind = CorrKind::Pearson);

struct FilterConfig {
  double min_gold_pass = 0.8;
  double min_loo_corr = 0.0;
};

// Gold gate first (fail share above 1 - min_gold_pass drops the annotator),
// then repeatedly drops the annotator with the lowest leave-one-out Pearson
// below min_loo_corr, ties to the smaller id. A constant leave-one-out pair
// counts as the lowest possible correlation. Gold pairs are not used for the
// correlation stage. Returns sorted ids; throws AllFiltered.
std::vector<std::string> filter_annotators(const std::vector<scoring::AnnotationSet>& sets,
                                           Lang culture,
                                           const std::vector<scoring::GoldItem>& gold,
                                           const FilterConfig& cfg = {});

// Mean leave-one-out correlation over the rows of `m`. The p-value permutes
// every row independently. Throws AllFiltered for fewer than two rows.
CorrelationResult inter_annotator_agreement(const AnnotatorMatrix& m, CorrKind kind,
                                            const PermutationConfig& cfg = {});

// Rows paired by position (both matrices sorted by id), row k of the result
// is en row k minus cn row k over the shared pairs.
AnnotatorMatrix difference_matrix(const AnnotatorMatrix& en, const AnnotatorMatrix& cn);

// Two independent uniform [0, 1) vectors.
std::pair<std::vector<double>, std::vector<double>> random_baseline(std::size_t n,
                                                                    std::uint64_t seed);

// Sentence log probability contract: {"text"} -> {"logprob"}.
class LogProbScorer {
 public:
  virtual ~LogProbScorer() = default;
  virtual double logprob(const std::string& text) const = 0;
};

// Add-one smoothed unigram model over classifier tokens; unseen tokens share
// one extra vocabulary slot.
class UnigramLM : public LogProbScorer {
 public:
  UnigramLM(Lang lang, const std::vector<std::string>& corpus);
  double logprob(const std::string& text) const override;
  double token_logprob(const std::string& token) const;

 private:
  Lang lang_;
  std::map<std::string, std::size_t> counts_;
  std::size_t total_ = 0;
};

class HttpLogProbScorer : public LogProbScorer {
 public:
  explicit HttpLogProbScorer(const std::string& endpoint, int timeout_seconds = 30);
  double logprob(const std::string& text) const override;

 private:
  net::Endpoint endpoint_;
  int timeout_;
};

// (v - min) / (max - min); a constant vector maps to 0.5 everywhere.
std::vector<double> min_max(const std::vector<double>& v);

// logprob / token count per sentence, then min-max normalised.
std::vector<double> lm_baseline(const std::vector<std::string>& sentences, Lang lang,
                                const LogProbScorer& scorer);

constexpr std::array<backtranslate::DebiasMode, 3> kModes = {
    backtranslate::DebiasMode::None, backtranslate::DebiasMode::NegativeOnly,
    backtranslate::DebiasMode::Both};

struct MatrixCell {
  double f1_negative = 0.0;
  double f1_positive = 0.0;
  double accuracy = 0.0;
};

struct MatrixResult {
  Lang lang = Lang::En;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::array<std::array<MatrixCell, 3>, 3> cells{};  // [train mode][test mode]
};

struct MatrixConfig {
  classifier::TrainConfig train;
  backtranslate::PivotConfig pivot;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  backtranslate::DebiasOptions debias;
};

// Test split membership by hash of the sample's family (its own id for a
// positive, its parent for a negative), so a sentence and its flips never
// straddle the split.
bool in_test_split(const fabrication::LabeledSample& s, double test_fraction, std::uint64_t seed);

// One model per train mode, trained on that variant of the train split and
// scored on every variant of the test split.
MatrixResult run_matrix(const std::vector<fabrication::LabeledSample>& samples,
                        const backtranslate::TranslationClient& client, const MatrixConfig& cfg);

nlohmann::json to_json(const CorrelationResult& c);
nlohmann::json to_json(const MatrixResult& m);

struct AgreementRow {
  CorrelationResult pearson;
  CorrelationResult spearman;
};

struct EvalReport {
  std::string model_id;
  std::string baseline;
  std::size_t n_pairs = 0;
  std::map<std::string, AgreementRow> per_culture;  // "en", "cn"
  AgreementRow difference;
  std::map<std::string, double> binary_accuracy;  // "en", "cn", "difference"
  std::map<std::string, AgreementRow> inter_annotator;  // optional, "en", "cn", "difference"
  std::map<std::string, std::vector<std::string>> retained_annotators;
};

// Aligns scores and human records by pair_id; throws PairMismatch when the
// id sets differ.
EvalReport make_report(const std::string& model_id, const std::string& baseline,
                       const std::vector<scoring::ScorePair>& scores,
                       const std::vector<scoring::DifferenceRecord>& human,
                       const PermutationConfig& perm);

nlohmann::json to_json(const EvalReport& r);

}  // namespace cdi::evaluation
