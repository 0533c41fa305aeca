#include "cdi/evaluation.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "cdi/rng.hpp"

namespace cdi::evaluation {

using nlohmann::json;
using fabrication::LabeledSample;

namespace {

constexpr double kTieEps = 1e-12;

void check_lengths(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::LengthMismatch, "vectors of length " + std::to_string(x.size()) +
                                               " and " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(ErrorKind::DegenerateInput, "correlation needs n >= 2");
}

// Centred and scaled to unit norm; throws DegenerateInput on zero variance.
std::vector<double> standardize(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> c(v.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    c[i] = v[i] - m;
    ss += c[i] * c[i];
  }
  if (!(ss > 0.0)) throw Error(ErrorKind::DegenerateInput, "zero-variance input");
  const double norm = std::sqrt(ss);
  for (double& x : c) x /= norm;
  return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double clamp_r(double r) { return std::clamp(r, -1.0, 1.0); }

double permutation_p(const std::vector<double>& x, const std::vector<double>& y, double r_obs,
                     const PermutationConfig& cfg) {
  const auto xs = standardize(x);
  auto ys = standardize(y);
  Rng rng(cfg.seed);
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < cfg.permutations; ++p) {
    rng.shuffle(std::span<double>(ys));
    if (std::abs(dot(xs, ys)) >= std::abs(r_obs) - kTieEps) ++extreme;
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(cfg.permutations + 1);
}

}  // namespace

std::string_view to_string(CorrKind kind) {
  return kind == CorrKind::Pearson ? "pearson" : "spearman";
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y);
  return clamp_r(dot(standardize(x), standardize(y)));
}

std::vector<double> fractional_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman_r(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y);
  return pearson_r(fractional_ranks(x), fractional_ranks(y));
}

CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y,
                          const PermutationConfig& cfg) {
  const double r = pearson_r(x, y);
  return {CorrKind::Pearson, r, permutation_p(x, y, r, cfg), x.size()};
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           const PermutationConfig& cfg) {
  const double r = spearman_r(x, y);
  return {CorrKind::Spearman, r, permutation_p(fractional_ranks(x), fractional_ranks(y), r, cfg),
          x.size()};
}

CorrelationResult correlate(CorrKind kind, const std::vector<double>& x,
                            const std::vector<double>& y, const PermutationConfig& cfg) {
  return kind == CorrKind::Pearson ? pearson(x, y, cfg) : spearman(x, y, cfg);
}

double binary_accuracy(const std::vector<double>& pred, const std::vector<double>& truth,
                       double threshold) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
  }
  if (pred.empty()) throw Error(ErrorKind::LengthMismatch, "binary accuracy of empty vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    hits += scoring::binarize(pred[i], threshold) == scoring::binarize(truth[i], threshold);
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Annotators

AnnotatorMatrix AnnotatorMatrix::select(const std::vector<std::string>& annotator_ids) const {
  AnnotatorMatrix out;
  out.pair_ids = pair_ids;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    if (std::find(annotator_ids.begin(), annotator_ids.end(), annotators[i]) != annotator_ids.end()) {
      out.annotators.push_back(annotators[i]);
      out.judgments.push_back(judgments[i]);
    }
  }
  return out;
}

AnnotatorMatrix build_matrix(const std::vector<scoring::AnnotationSet>& sets, Lang culture,
                             const std::vector<std::string>& exclude) {
  const std::set<std::string> skip(exclude.begin(), exclude.end());
  std::set<std::string> annotators;
  std::map<std::string, const scoring::AnnotationSet*> by_pair;
  for (const auto& s : sets) {
    if (s.culture != culture || skip.count(s.pair_id)) continue;
    if (!by_pair.emplace(s.pair_id, &s).second) {
      throw Error(ErrorKind::InvalidArgument, "two annotation sets for pair " + s.pair_id);
    }
    for (const auto& j : s.judgments) annotators.insert(j.annotator_id);
  }
  if (by_pair.empty() || annotators.empty()) {
    throw Error(ErrorKind::EmptyAnnotations,
                "no annotations for culture " + std::string(to_string(culture)));
  }
  AnnotatorMatrix m;
  m.annotators.assign(annotators.begin(), annotators.end());
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < m.annotators.size(); ++i) row[m.annotators[i]] = i;
  m.judgments.assign(m.annotators.size(), std::vector<double>(by_pair.size(), -1.0));
  std::size_t col = 0;
  for (const auto& [pid, s] : by_pair) {
    m.pair_ids.push_back(pid);
    for (const auto& j : s->judgments) m.judgments[row[j.annotator_id]][col] = j.judgment;
    ++col;
  }
  for (std::size_t i = 0; i < m.annotators.size(); ++i) {
    for (std::size_t c = 0; c < m.pair_ids.size(); ++c) {
      if (m.judgments[i][c] < 0) {
        throw Error(ErrorKind::InvalidArgument,
                    "annotator " + m.annotators[i] + " did not judge pair " + m.pair_ids[c]);
      }
    }
  }
  return m;
}

namespace {

std::vector<double> others_mean(const std::vector<std::vector<double>>& rows, std::size_t i) {
  std::vector<double> mean(rows[i].size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == i) continue;
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += rows[r][c];
  }
  for (double& v : mean) v /= static_cast<double>(rows.size() - 1);
  return mean;
}

double loo(const std::vector<std::vector<double>>& rows, std::size_t i, CorrKind kind) {
  if (rows.size() < 2) throw Error(ErrorKind::AllFiltered, "leave-one-out needs two annotators");
  const auto rest = others_mean(rows, i);
  return kind == CorrKind::Pearson ? pearson_r(rows[i], rest) : spearman_r(rows[i], rest);
}

double mean_loo(const std::vector<std::vector<double>>& rows, CorrKind kind) {
  double s = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) s += loo(rows, i, kind);
  return s / static_cast<double>(rows.size());
}

}  // namespace

double loo_correlation(const AnnotatorMatrix& m, std::size_t i, CorrKind kind) {
  return loo(m.judgments, i, kind);
}

std::vector<std::string> filter_annotators(const std::vector<scoring::AnnotationSet>& sets,
                                           Lang culture,
                                           const std::vector<scoring::GoldItem>& gold,
                                           const FilterConfig& cfg) {
  const AnnotatorMatrix full = build_matrix(sets, culture);
  std::map<std::string, int> expected;
  for (const auto& g : gold) expected[g.pair_id] = g.expected;

  std::vector<std::string> kept;
  std::vector<std::string> gold_ids;
  for (const auto& pid : full.pair_ids) {
    if (expected.count(pid)) gold_ids.push_back(pid);
  }
  for (std::size_t i = 0; i < full.annotators.size(); ++i) {
    std::size_t fails = 0;
    for (std::size_t c = 0; c < full.pair_ids.size(); ++c) {
      const auto it = expected.find(full.pair_ids[c]);
      if (it != expected.end() && static_cast<int>(full.judgments[i][c]) != it->second) ++fails;
    }
    const double allowed = (1.0 - cfg.min_gold_pass) * static_cast<double>(gold_ids.size());
    if (gold_ids.empty() || static_cast<double>(fails) <= allowed + 1e-9) {
      kept.push_back(full.annotators[i]);
    }
  }
  if (kept.empty()) throw Error(ErrorKind::AllFiltered, "every annotator failed the gold checks");

  AnnotatorMatrix m = build_matrix(sets, culture, gold_ids).select(kept);
  while (m.annotators.size() >= 2) {
    std::size_t worst = 0;
    double worst_r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.annotators.size(); ++i) {
      double r;
      try {
        r = loo_correlation(m, i);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateInput) throw;
        r = -std::numeric_limits<double>::infinity();
      }
      if (r < worst_r) {  // rows are sorted by id, so the first minimum wins ties
        worst_r = r;
        worst = i;
      }
    }
    if (!(worst_r < cfg.min_loo_corr)) break;
    m.annotators.erase(m.annotators.begin() + static_cast<std::ptrdiff_t>(worst));
    m.judgments.erase(m.judgments.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  if (m.annotators.empty()) throw Error(ErrorKind::AllFiltered, "no annotator retained");
  return m.annotators;
}

CorrelationResult inter_annotator_agreement(const AnnotatorMatrix& m, CorrKind kind,
                                            const PermutationConfig& cfg) {
  if (m.annotators.size() < 2) {
    throw Error(ErrorKind::AllFiltered, "agreement needs at least two annotators");
  }
  const double obs = mean_loo(m.judgments, kind);
  Rng rng(cfg.seed);
  auto rows = m.judgments;
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < cfg.permutations; ++p) {
    for (auto& r : rows) rng.shuffle(std::span<double>(r));
    double stat = 0.0;
    try {
      stat = mean_loo(rows, kind);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput) throw;
    }
    if (std::abs(stat) >= std::abs(obs) - kTieEps) ++extreme;
  }
  return {kind, obs, static_cast<double>(1 + extreme) / static_cast<double>(cfg.permutations + 1),
          m.pair_ids.size()};
}

AnnotatorMatrix difference_matrix(const AnnotatorMatrix& en, const AnnotatorMatrix& cn) {
  AnnotatorMatrix out;
  std::vector<std::size_t> en_col, cn_col;
  for (std::size_t c = 0; c < en.pair_ids.size(); ++c) {
    const auto it = std::find(cn.pair_ids.begin(), cn.pair_ids.end(), en.pair_ids[c]);
    if (it == cn.pair_ids.end()) continue;
    out.pair_ids.push_back(en.pair_ids[c]);
    en_col.push_back(c);
    cn_col.push_back(static_cast<std::size_t>(it - cn.pair_ids.begin()));
  }
  const std::size_t k = std::min(en.annotators.size(), cn.annotators.size());
  for (std::size_t r = 0; r < k; ++r) {
    out.annotators.push_back(en.annotators[r] + "|" + cn.annotators[r]);
    std::vector<double> row;
    for (std::size_t c = 0; c < en_col.size(); ++c) {
      row.push_back(en.judgments[r][en_col[c]] - cn.judgments[r][cn_col[c]]);
    }
    out.judgments.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baselines

std::pair<std::vector<double>, std::vector<double>> random_baseline(std::size_t n,
                                                                    std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "random baseline needs n >= 1");
  Rng rng(seed);
  std::vector<double> en(n), cn(n);
  for (double& v : en) v = rng.uniform();
  for (double& v : cn) v = rng.uniform();
  return {std::move(en), std::move(cn)};
}

UnigramLM::UnigramLM(Lang lang, const std::vector<std::string>& corpus) : lang_(lang) {
  for (const auto& s : corpus) {
    for (const auto& t : classifier::tokens(s, lang, INT_MAX)) {
      ++counts_[t];
      ++total_;
    }
  }
}

double UnigramLM::token_logprob(const std::string& token) const {
  const auto it = counts_.find(token);
  const double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((c + 1.0) / static_cast<double>(total_ + counts_.size() + 1));
}

double UnigramLM::logprob(const std::string& text) const {
  double lp = 0.0;
  for (const auto& t : classifier::tokens(text, lang_, INT_MAX)) lp += token_logprob(t);
  return lp;
}

HttpLogProbScorer::HttpLogProbScorer(const std::string& endpoint, int timeout_seconds)
    : endpoint_(net::parse_endpoint(endpoint)), timeout_(timeout_seconds) {}

double HttpLogProbScorer::logprob(const std::string& text) const {
  const json res =
      net::post_json(endpoint_, {{"text", text}}, ErrorKind::ScorerUnavailable, timeout_);
  if (!res.is_object() || !res.contains("logprob") || !res["logprob"].is_number()) {
    throw Error(ErrorKind::MalformedScore, "log-prob reply without numeric logprob");
  }
  return res["logprob"].get<double>();
}

std::vector<double> min_max(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo, max = *hi;
  std::vector<double> out(v.size(), 0.5);
  if (max > min) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - min) / (max - min);
  }
  return out;
}

std::vector<double> lm_baseline(const std::vector<std::string>& sentences, Lang lang,
                                const LogProbScorer& scorer) {
  std::vector<double> avg;
  for (const auto& s : sentences) {
    const auto n = classifier::tokens(s, lang, INT_MAX).size();
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty sentence in LM baseline");
    const double lp = scorer.logprob(s);
    if (!std::isfinite(lp)) throw Error(ErrorKind::MalformedScore, "non-finite log probability");
    avg.push_back(lp / static_cast<double>(n));
  }
  return min_max(avg);
}

// ---------------------------------------------------------------------------
// Train/test grid

bool in_test_split(const LabeledSample& s, double test_fraction, std::uint64_t seed) {
  const std::string& family = s.parent_id ? *s.parent_id : s.id;
  const std::uint64_t h = text::fnv1a64(std::to_string(seed) + ":" + family);
  return static_cast<double>(h % 1000000) < test_fraction * 1000000.0;
}

MatrixResult run_matrix(const std::vector<LabeledSample>& samples,
                        const backtranslate::TranslationClient& client, const MatrixConfig& cfg) {
  if (samples.empty()) throw Error(ErrorKind::EmptyData, "run_matrix needs samples");
  MatrixResult out;
  out.lang = samples.front().lang;
  std::array<std::vector<LabeledSample>, 3> train_split, test_split;
  for (std::size_t m = 0; m < kModes.size(); ++m) {
    for (auto& s : backtranslate::debias_dataset(samples, kModes[m], cfg.pivot, client, cfg.debias)) {
      (in_test_split(s, cfg.test_fraction, cfg.split_seed) ? test_split : train_split)[m].push_back(
          std::move(s));
    }
  }
  out.train_size = train_split[0].size();
  out.test_size = test_split[0].size();
  if (out.test_size == 0) throw Error(ErrorKind::EmptyData, "test split is empty");
  for (std::size_t tr = 0; tr < kModes.size(); ++tr) {
    const auto model = classifier::train(train_split[tr], cfg.train);
    for (std::size_t te = 0; te < kModes.size(); ++te) {
      const auto f1 = classifier::evaluate_f1(model, test_split[te]);
      out.cells[tr][te] = {f1.f1_negative, f1.f1_positive, f1.accuracy};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const CorrelationResult& c) {
  return {{"kind", to_string(c.kind)},
          {"r", jsonl::fixed6(c.r)},
          {"p_value", jsonl::fixed6(c.p_value)},
          {"n", c.n}};
}

json to_json(const MatrixResult& m) {
  json grid = json::object();
  for (std::size_t tr = 0; tr < kModes.size(); ++tr) {
    json row = json::object();
    for (std::size_t te = 0; te < kModes.size(); ++te) {
      const auto& c = m.cells[tr][te];
      row[std::string(backtranslate::to_string(kModes[te]))] = {
          {"f1_negative", jsonl::fixed6(c.f1_negative)},
          {"f1_positive", jsonl::fixed6(c.f1_positive)},
          {"accuracy", jsonl::fixed6(c.accuracy)}};
    }
    grid[std::string(backtranslate::to_string(kModes[tr]))] = row;
  }
  return {{"lang", to_string(m.lang)},
          {"train_size", m.train_size},
          {"test_size", m.test_size},
          {"train_mode", grid}};
}

namespace {

AgreementRow both_kinds(const std::vector<double>& x, const std::vector<double>& y,
                        const PermutationConfig& perm) {
  return {pearson(x, y, perm), spearman(x, y, perm)};
}

json to_json(const AgreementRow& a) {
  return {{"pearson", to_json(a.pearson)}, {"spearman", to_json(a.spearman)}};
}

}  // namespace

EvalReport make_report(const std::string& model_id, const std::string& baseline,
                       const std::vector<scoring::ScorePair>& scores,
                       const std::vector<scoring::DifferenceRecord>& human,
                       const PermutationConfig& perm) {
  std::map<std::string, const scoring::DifferenceRecord*> by_id;
  for (const auto& h : human) by_id[h.pair_id] = &h;
  if (by_id.size() != scores.size()) {
    throw Error(ErrorKind::PairMismatch, std::to_string(scores.size()) + " scored pairs but " +
                                             std::to_string(by_id.size()) + " annotated pairs");
  }
  std::vector<double> mp_en, mp_cn, d_model, ha_en, ha_cn, d_human;
  for (const auto& s : scores) {
    const auto it = by_id.find(s.pair_id);
    if (it == by_id.end()) throw Error(ErrorKind::PairMismatch, "no annotations for " + s.pair_id);
    mp_en.push_back(s.mp_en);
    mp_cn.push_back(s.mp_cn);
    d_model.push_back(s.d_model);
    ha_en.push_back(it->second->ha_en);
    ha_cn.push_back(it->second->ha_cn);
    d_human.push_back(it->second->d_human);
  }
  EvalReport r;
  r.model_id = model_id;
  r.baseline = baseline;
  r.n_pairs = scores.size();
  r.per_culture["en"] = both_kinds(mp_en, ha_en, perm);
  r.per_culture["cn"] = both_kinds(mp_cn, ha_cn, perm);
  r.difference = both_kinds(d_model, d_human, perm);
  r.binary_accuracy["en"] = binary_accuracy(mp_en, ha_en, 0.5);
  r.binary_accuracy["cn"] = binary_accuracy(mp_cn, ha_cn, 0.5);
  r.binary_accuracy["difference"] = binary_accuracy(d_model, d_human, 0.0);
  return r;
}

json to_json(const EvalReport& r) {
  json per_culture = json::object();
  for (const auto& [k, v] : r.per_culture) per_culture[k] = to_json(v);
  json acc = json::object();
  for (const auto& [k, v] : r.binary_accuracy) acc[k] = jsonl::fixed6(v);
  json out = {{"model_id", r.model_id},       {"baseline", r.baseline},
              {"n_pairs", r.n_pairs},         {"per_culture", per_culture},
              {"difference", to_json(r.difference)}, {"binary_accuracy", acc}};
  if (!r.inter_annotator.empty()) {
    json ia = json::object();
    for (const auto& [k, v] : r.inter_annotator) ia[k] = to_json(v);
    out["inter_annotator"] = ia;
  }
  if (!r.retained_annotators.empty()) out["retained_annotators"] = r.retained_annotators;
  return out;
}

}  // namespace cdi::evaluation
