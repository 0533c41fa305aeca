#pragma once

// Per-culture acceptance classifier: hashed n-gram logistic regression, plus
// adapters for scorers that live in another process.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cdi/fabrication.hpp"
#include "cdi/net.hpp"

namespace cdi::classifier {

using fabrication::LabeledSample;

struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<std::uint32_t> values;   // n-gram counts

  bool operator==(const FeatureVector&) const = default;
};

struct TrainConfig {
  int hash_bits = 20;
  int ngram_max = 2;
  int epochs = 5;
  double learning_rate = 0.1;
  double l2 = 1e-6;
  std::uint64_t seed = 0;
  int max_seq_tokens = 128;

  // Throws InvalidArgument.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& obj);

// English: lowercased whitespace tokens. Chinese: one token per non-space
// character. At most `max_tokens` tokens are kept.
std::vector<std::string> tokens(std::string_view text, Lang lang, int max_tokens);

// Every n-gram for n = 1..ngram_max, tokens joined by a single space.
std::vector<std::string> ngrams(std::string_view text, Lang lang, const TrainConfig& cfg);

// Bucket = fnv1a64(ngram) mod 2^hash_bits.
std::uint32_t bucket(std::string_view ngram, int hash_bits);

// Throws InvalidArgument on text that is empty after normalisation.
FeatureVector featurize(std::string_view text, Lang lang, const TrainConfig& cfg);

struct CultureModel {
  Lang lang = Lang::En;
  std::vector<double> weights;  // 2^hash_bits
  double bias = 0.0;
  TrainConfig config;
  std::string train_fingerprint;

  bool operator==(const CultureModel&) const = default;
};

CultureModel zero_model(Lang lang, const TrainConfig& cfg);

// Hex FNV-1a over the serialized samples.
std::string fingerprint(const std::vector<LabeledSample>& samples);

// Logistic function kept strictly inside (0, 1).
double logistic(double z);

// Seeded SGD on the regularized log loss. The L2 shrinkage is applied to the
// features active in each step. `epoch_loss`, if given, receives the full
// objective after each epoch.
CultureModel train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                   std::vector<double>* epoch_loss = nullptr);

// Mean log loss + (l2/2)|w|^2 over `x`, with its gradient.
double loss_and_gradient(const std::vector<FeatureVector>& x, const std::vector<int>& y,
                         const std::vector<double>& w, double b, double l2,
                         std::vector<double>* grad_w, double* grad_b);

double predict_score(const CultureModel& model, std::string_view text);
// Throws LangMismatch when `declared` differs from the model language.
double predict_score(const CultureModel& model, std::string_view text, Lang declared);

struct F1Result {
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  double accuracy = 0.0;
};

// Prediction is score > threshold. A class never predicted nor present gets 0.
F1Result f1_scores(const std::vector<int>& labels, const std::vector<double>& scores,
                   double threshold = 0.5);

class Scorer;
F1Result evaluate_f1(const CultureModel& model, const std::vector<LabeledSample>& test,
                     double threshold = 0.5);
F1Result evaluate_f1(const Scorer& scorer, const std::vector<LabeledSample>& test,
                     double threshold = 0.5);

nlohmann::json to_json(const CultureModel& m);
CultureModel model_from_json(const nlohmann::json& obj, const std::string& where);
void save_model(const std::filesystem::path& path, const CultureModel& m);
CultureModel load_model(const std::filesystem::path& path);

// Anything that maps a statement to an acceptance probability.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const std::string& text) const = 0;
};

class ModelScorer : public Scorer {
 public:
  explicit ModelScorer(CultureModel model) : model_(std::move(model)) {}
  double score(const std::string& text) const override;
  const CultureModel& model() const { return model_; }

 private:
  CultureModel model_;
};

// Reads the "score" field of a scorer reply; throws MalformedScore when it
// is missing, not a number, or outside [0, 1].
double parse_score_reply(const nlohmann::json& reply);

// Line-delimited {"text"} -> {"score"} over a child process's stdin/stdout.
class StdioScorer : public Scorer {
 public:
  // `command` runs under /bin/sh -c.
  explicit StdioScorer(const std::string& command);
  ~StdioScorer() override;
  StdioScorer(const StdioScorer&) = delete;
  StdioScorer& operator=(const StdioScorer&) = delete;

  double score(const std::string& text) const override;

 private:
  mutable std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
};

// POST {"text"} -> {"score"}.
class HttpScorer : public Scorer {
 public:
  HttpScorer(const std::string& endpoint, double rate_limit_rps = 0, int timeout_seconds = 30);
  double score(const std::string& text) const override;

 private:
  net::Endpoint endpoint_;
  mutable net::RateLimiter limiter_;
  int timeout_;
};

// Delegates to `scorer` and checks the result lies in [0, 1].
double external_score(const Scorer& scorer, const std::string& text);

}  // namespace cdi::classifier
