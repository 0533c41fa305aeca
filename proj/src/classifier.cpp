#include "cdi/classifier.hpp"

#include <csignal>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>

#include <sys/wait.h>
#include <unistd.h>

#include "cdi/rng.hpp"

namespace cdi::classifier {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be > 0");
  if (hash_bits < 8 || hash_bits > 30) {
    throw Error(ErrorKind::InvalidArgument, "hash_bits must lie in [8, 30]");
  }
  if (ngram_max < 1) throw Error(ErrorKind::InvalidArgument, "ngram_max must be >= 1");
  if (l2 < 0) throw Error(ErrorKind::InvalidArgument, "l2 must be >= 0");
  if (max_seq_tokens < 1) throw Error(ErrorKind::InvalidArgument, "max_seq_tokens must be >= 1");
}

json to_json(const TrainConfig& c) {
  return {{"hash_bits", c.hash_bits},         {"ngram_max", c.ngram_max},
          {"epochs", c.epochs},               {"learning_rate", c.learning_rate},
          {"l2", c.l2},                       {"seed", c.seed},
          {"max_seq_tokens", c.max_seq_tokens}};
}

TrainConfig train_config_from_json(const json& obj) {
  if (!obj.is_object()) throw Error(ErrorKind::SchemaViolation, "train config must be an object");
  TrainConfig c;
  for (const auto& [key, v] : obj.items()) {
    const bool num = v.is_number();
    if (!num) throw Error(ErrorKind::SchemaViolation, "train config field " + key + " must be a number");
    if (key == "hash_bits") c.hash_bits = v.get<int>();
    else if (key == "ngram_max") c.ngram_max = v.get<int>();
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "l2") c.l2 = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "max_seq_tokens") c.max_seq_tokens = v.get<int>();
    else throw Error(ErrorKind::SchemaViolation, "unknown train config field " + key);
  }
  c.validate();
  return c;
}

std::vector<std::string> tokens(std::string_view text, Lang lang, int max_tokens) {
  std::vector<std::string> out;
  if (lang == Lang::En) {
    for (auto& t : text::split_whitespace(text::ascii_lower(text))) {
      if (static_cast<int>(out.size()) >= max_tokens) break;
      out.push_back(std::move(t));
    }
    return out;
  }
  for (char32_t cp : text::decode_utf8(text)) {
    if (text::is_space(cp)) continue;
    if (static_cast<int>(out.size()) >= max_tokens) break;
    std::string s;
    text::append_utf8(s, cp);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> ngrams(std::string_view text, Lang lang, const TrainConfig& cfg) {
  const auto toks = tokens(text, lang, cfg.max_seq_tokens);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    std::string g;
    for (int n = 1; n <= cfg.ngram_max && i + n <= toks.size(); ++n) {
      if (n > 1) g += ' ';
      g += toks[i + n - 1];
      out.push_back(g);
    }
  }
  return out;
}

std::uint32_t bucket(std::string_view ngram, int hash_bits) {
  return static_cast<std::uint32_t>(text::fnv1a64(ngram) & ((std::uint64_t{1} << hash_bits) - 1));
}

FeatureVector featurize(std::string_view text, Lang lang, const TrainConfig& cfg) {
  const auto grams = ngrams(text, lang, cfg);
  if (grams.empty()) throw Error(ErrorKind::InvalidArgument, "cannot featurize empty text");
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& g : grams) ++counts[bucket(g, cfg.hash_bits)];
  FeatureVector fv;
  fv.indices.reserve(counts.size());
  fv.values.reserve(counts.size());
  for (const auto& [i, c] : counts) {
    fv.indices.push_back(i);
    fv.values.push_back(c);
  }
  return fv;
}

CultureModel zero_model(Lang lang, const TrainConfig& cfg) {
  cfg.validate();
  CultureModel m;
  m.lang = lang;
  m.config = cfg;
  m.weights.assign(std::size_t{1} << cfg.hash_bits, 0.0);
  return m;
}

std::string fingerprint(const std::vector<LabeledSample>& samples) {
  std::string all;
  for (const auto& s : samples) all += fabrication::to_json(s).dump() + "\n";
  return text::hex64(text::fnv1a64(all));
}

double logistic(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

namespace {

double dot(const FeatureVector& x, const std::vector<double>& w, double b) {
  double z = b;
  for (std::size_t k = 0; k < x.indices.size(); ++k) z += w[x.indices[k]] * x.values[k];
  return z;
}

}  // namespace

double loss_and_gradient(const std::vector<FeatureVector>& x, const std::vector<int>& y,
                         const std::vector<double>& w, double b, double l2,
                         std::vector<double>* grad_w, double* grad_b) {
  if (x.empty() || x.size() != y.size()) {
    throw Error(ErrorKind::InvalidArgument, "loss needs matching, nonempty x and y");
  }
  const double n = static_cast<double>(x.size());
  if (grad_w) grad_w->assign(w.size(), 0.0);
  if (grad_b) *grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = logistic(dot(x[i], w, b));
    loss -= y[i] ? std::log(p) : std::log1p(-p);
    const double g = (p - y[i]) / n;
    if (grad_w) {
      for (std::size_t k = 0; k < x[i].indices.size(); ++k) {
        (*grad_w)[x[i].indices[k]] += g * x[i].values[k];
      }
    }
    if (grad_b) *grad_b += g;
  }
  loss /= n;
  double sq = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    sq += w[j] * w[j];
    if (grad_w) (*grad_w)[j] += l2 * w[j];
  }
  return loss + 0.5 * l2 * sq;
}

CultureModel train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                   std::vector<double>* epoch_loss) {
  cfg.validate();
  if (samples.empty()) throw Error(ErrorKind::EmptyData, "no training samples");
  const Lang lang = samples.front().lang;
  bool has_pos = false, has_neg = false;
  for (const auto& s : samples) {
    if (s.lang != lang) {
      throw Error(ErrorKind::LangMismatch, "training samples mix languages (" + s.id + ")");
    }
    (s.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw Error(ErrorKind::SingleClassData, "training data has one class");

  std::vector<FeatureVector> x;
  std::vector<int> y;
  x.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(featurize(s.text, lang, cfg));
    y.push_back(s.label);
  }

  CultureModel m = zero_model(lang, cfg);
  m.train_fingerprint = fingerprint(samples);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed);
  const double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const FeatureVector& xi = x[i];
      const double g = logistic(dot(xi, m.weights, m.bias)) - y[i];
      for (std::size_t k = 0; k < xi.indices.size(); ++k) {
        double& wj = m.weights[xi.indices[k]];
        wj -= lr * (g * xi.values[k] + cfg.l2 * wj);
      }
      m.bias -= lr * g;
    }
    if (epoch_loss) {
      epoch_loss->push_back(loss_and_gradient(x, y, m.weights, m.bias, cfg.l2, nullptr, nullptr));
    }
  }
  return m;
}

double predict_score(const CultureModel& model, std::string_view text) {
  return logistic(dot(featurize(text, model.lang, model.config), model.weights, model.bias));
}

double predict_score(const CultureModel& model, std::string_view text, Lang declared) {
  if (declared != model.lang) {
    throw Error(ErrorKind::LangMismatch, "text declared " + std::string(to_string(declared)) +
                                             ", model is " + std::string(to_string(model.lang)));
  }
  return predict_score(model, text);
}

F1Result f1_scores(const std::vector<int>& labels, const std::vector<double>& scores,
                   double threshold) {
  if (labels.empty() || labels.size() != scores.size()) {
    throw Error(ErrorKind::EmptyData, "F1 needs matching, nonempty labels and scores");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = scores[i] > threshold;
    const bool gold = labels[i] == 1;
    if (pred && gold) ++tp;
    else if (pred) ++fp;
    else if (gold) ++fn;
    else ++tn;
  }
  auto f1 = [](std::size_t t, std::size_t f_p, std::size_t f_n) {
    const std::size_t den = 2 * t + f_p + f_n;
    return den == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(den);
  };
  F1Result r;
  r.f1_positive = f1(tp, fp, fn);
  r.f1_negative = f1(tn, fn, fp);
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  return r;
}

F1Result evaluate_f1(const Scorer& scorer, const std::vector<LabeledSample>& test,
                     double threshold) {
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& s : test) {
    labels.push_back(s.label);
    scores.push_back(scorer.score(s.text));
  }
  return f1_scores(labels, scores, threshold);
}

F1Result evaluate_f1(const CultureModel& model, const std::vector<LabeledSample>& test,
                     double threshold) {
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& s : test) {
    labels.push_back(s.label);
    scores.push_back(predict_score(model, s.text, s.lang));
  }
  return f1_scores(labels, scores, threshold);
}

// ---------------------------------------------------------------------------
// Model file

namespace {
constexpr const char* kFormat = "cdi-culture-model";
constexpr int kVersion = 1;
}  // namespace

json to_json(const CultureModel& m) {
  json weights = json::array();
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    if (m.weights[j] != 0.0) weights.push_back(json::array({j, m.weights[j]}));
  }
  return {{"format", kFormat},
          {"version", kVersion},
          {"lang", to_string(m.lang)},
          {"config", to_json(m.config)},
          {"bias", m.bias},
          {"train_fingerprint", m.train_fingerprint},
          {"weights", weights}};
}

CultureModel model_from_json(const json& obj, const std::string& where) {
  using jsonl::FieldType;
  jsonl::validate(obj,
                  {{"format", FieldType::String},
                   {"version", FieldType::Integer},
                   {"lang", FieldType::String},
                   {"config", FieldType::Object},
                   {"bias", FieldType::Number},
                   {"train_fingerprint", FieldType::String},
                   {"weights", FieldType::Array}},
                  where);
  if (obj["format"] != kFormat || obj["version"] != kVersion) {
    throw Error(ErrorKind::SchemaViolation, where + ": unsupported model format");
  }
  CultureModel m;
  try {
    m = zero_model(parse_lang(obj["lang"].get<std::string>()),
                   train_config_from_json(obj["config"]));
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
  }
  m.bias = obj["bias"];
  m.train_fingerprint = obj["train_fingerprint"];
  for (const auto& entry : obj["weights"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_unsigned() ||
        !entry[1].is_number() || entry[0].get<std::size_t>() >= m.weights.size()) {
      throw Error(ErrorKind::SchemaViolation, where + ": bad weight entry " + entry.dump());
    }
    m.weights[entry[0].get<std::size_t>()] = entry[1].get<double>();
  }
  return m;
}

void save_model(const fs::path& path, const CultureModel& m) {
  jsonl::write_file(path, to_json(m).dump() + "\n");
}

CultureModel load_model(const fs::path& path) {
  json obj;
  try {
    obj = json::parse(jsonl::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaViolation, path.string() + ": " + e.what());
  }
  return model_from_json(obj, path.string());
}

// ---------------------------------------------------------------------------
// Scorers

double ModelScorer::score(const std::string& text) const { return predict_score(model_, text); }

double parse_score_reply(const json& reply) {
  if (!reply.is_object() || !reply.contains("score") || !reply["score"].is_number()) {
    throw Error(ErrorKind::MalformedScore, "scorer reply without numeric score: " + reply.dump());
  }
  const double s = reply["score"].get<double>();
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::MalformedScore, "score outside [0, 1]: " + reply["score"].dump());
  }
  return s;
}

StdioScorer::StdioScorer(const std::string& command) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorKind::ScorerUnavailable, "pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorKind::ScorerUnavailable, "pipe failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw Error(ErrorKind::ScorerUnavailable, "fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
}

StdioScorer::~StdioScorer() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) waitpid(pid_, nullptr, 0);
}

double StdioScorer::score(const std::string& text) const {
  std::lock_guard lock(mu_);
  const std::string line = json{{"text", text}}.dump() + "\n";
  for (std::size_t off = 0; off < line.size();) {
    const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n <= 0) throw Error(ErrorKind::ScorerUnavailable, "scorer process closed its input");
    off += static_cast<std::size_t>(n);
  }
  std::string reply;
  for (int c; (c = std::fgetc(from_child_)) != EOF && c != '\n';) reply += static_cast<char>(c);
  if (reply.empty()) throw Error(ErrorKind::ScorerUnavailable, "scorer process gave no reply");
  json obj;
  try {
    obj = json::parse(reply);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::MalformedScore, "scorer reply is not JSON: " + reply);
  }
  return parse_score_reply(obj);
}

HttpScorer::HttpScorer(const std::string& endpoint, double rate_limit_rps, int timeout_seconds)
    : endpoint_(net::parse_endpoint(endpoint)), limiter_(rate_limit_rps), timeout_(timeout_seconds) {}

double HttpScorer::score(const std::string& text) const {
  limiter_.acquire();
  return parse_score_reply(
      net::post_json(endpoint_, {{"text", text}}, ErrorKind::ScorerUnavailable, timeout_));
}

double external_score(const Scorer& scorer, const std::string& text) {
  const double s = scorer.score(text);
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::MalformedScore, "score outside [0, 1]");
  }
  return s;
}

}  // namespace cdi::classifier
