#include "cdi/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <ctime>
#include <set>

#include "cdi/fabrication.hpp"
#include "cdi/jsonl.hpp"
#include "cdi/log.hpp"
#include "cdi/rng.hpp"

#ifndef CDI_DEFAULT_RESOURCE_DIR
#define CDI_DEFAULT_RESOURCE_DIR "resources"
#endif

namespace cdi::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using fabrication::LabeledSample;

namespace {

// Key-checked view of one config section.
class Section {
 public:
  Section(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    try {
      out = obj_.at(key).template get<T>();
    } catch (const json::exception&) {
      fail("bad value for " + key);
    }
  }

  const json* section(const std::string& key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  template <typename T>
  void read_per_lang(const std::string& key, std::map<Lang, T>& out) {
    const json* sub = section(key);
    if (!sub) return;
    if (!sub->is_object()) fail(key + " must map language codes to values");
    for (const auto& [code, value] : sub->items()) {
      try {
        out[parse_lang(code)] = value.template get<T>();
      } catch (const json::exception&) {
        fail("bad value for " + key + "." + code);
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) fail("unknown key " + key);
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::InvalidArgument, "config " + where_ + ": " + msg);
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

const fs::path& require(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::Io, "missing " + path.string() + " (run `cdi " + producer + "` first)");
  }
  return path;
}

std::string lang_code(Lang lang) { return std::string(to_string(lang)); }

std::string mode_name(DebiasMode mode) { return std::string(backtranslate::to_string(mode)); }

// Reproducible build timestamp: SOURCE_DATE_EPOCH when set, else the epoch.
std::string manifest_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(env));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::unique_ptr<backtranslate::TranslationClient> translation_client(const PipelineConfig& cfg) {
  fs::path tables = cfg.debias.tables_dir.empty() ? cfg.resources_dir / "mt" : cfg.debias.tables_dir;
  return backtranslate::make_client(cfg.debias.backend, cfg.debias.endpoint, tables,
                                    cfg.debias.rate_limit_rps);
}

classifier::TrainConfig train_config(const PipelineConfig& cfg) {
  classifier::TrainConfig t = cfg.train;
  if (!cfg.train_seed_set) t.seed = derive_seed(cfg.seed, "train");
  return t;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text::hex64(text::fnv1a64(bytes));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig config_from_json(const json& obj, const fs::path& base_dir) {
  PipelineConfig cfg;
  cfg.base_dir = base_dir;
  Section top(obj, "top level");
  std::string work = "work", resources, statements, annotations, gold;
  top.read("seed", cfg.seed);
  top.read("work_dir", work);
  top.read("resources_dir", resources);
  top.read("statements", statements);
  top.read("annotations", annotations);
  top.read("gold", gold);
  cfg.work_dir = resolve(base_dir, work);
  cfg.resources_dir = resources.empty() ? fs::path(CDI_DEFAULT_RESOURCE_DIR) : resolve(base_dir, resources);
  cfg.statements = resolve(base_dir, statements);
  cfg.annotations = resolve(base_dir, annotations);
  cfg.gold = resolve(base_dir, gold);

  if (const json* s = top.section("ingest")) {
    Section in(*s, "ingest");
    auto& c = cfg.ingest;
    in.read("source_mode", c.source_mode);
    std::map<Lang, std::string> dirs;
    in.read_per_lang("fixture_dir", dirs);
    for (const auto& [lang, d] : dirs) c.fixture_dir[lang] = resolve(base_dir, d);
    in.read_per_lang("endpoint", c.endpoint);
    in.read_per_lang("roots", c.roots);
    in.read("category_prefix", c.category_prefix);
    in.read("max_depth", c.max_depth);
    in.read("article_cap", c.article_cap);
    in.read("rate_limit_rps", c.rate_limit_rps);
    in.read_per_lang("min_len", c.min_len);
    in.read_per_lang("max_len", c.max_len);
    in.read("retries", c.retries);
    in.read("skip_budget", c.skip_budget);
    in.finish();
    if (c.source_mode != "fixture" && c.source_mode != "mediawiki") {
      in.fail("source_mode must be fixture or mediawiki");
    }
    if (c.max_depth < 0 || c.article_cap == 0 || c.retries < 0) in.fail("out of range value");
  }
  if (const json* s = top.section("fabricate")) {
    Section fab(*s, "fabricate");
    fab.read("colloc_threshold", cfg.fabricate.colloc_threshold);
    if (fab.has("seed")) {
      std::uint64_t seed = 0;
      fab.read("seed", seed);
      cfg.fabricate.seed = seed;
    }
    fab.finish();
  }
  if (const json* s = top.section("debias")) {
    Section db(*s, "debias");
    auto& c = cfg.debias;
    std::string mode = mode_name(c.mode), tables, cache;
    db.read("backend", c.backend);
    db.read("endpoint", c.endpoint);
    db.read("rate_limit_rps", c.rate_limit_rps);
    db.read("mode", mode);
    db.read_per_lang("pivot", c.pivot);
    db.read("tables_dir", tables);
    db.read("cache_dir", cache);
    db.read("parallelism", c.parallelism);
    db.read("retries", c.retries);
    db.finish();
    c.mode = backtranslate::parse_mode(mode);
    c.tables_dir = resolve(base_dir, tables);
    c.cache_dir = resolve(base_dir, cache);
    if (c.parallelism == 0) db.fail("parallelism must be positive");
  }
  if (const json* s = top.section("train")) {
    cfg.train = classifier::train_config_from_json(*s);
    cfg.train_seed_set = s->contains("seed");
  }
  if (const json* s = top.section("score")) {
    Section sc(*s, "score");
    sc.read("scorer", cfg.score.scorer);
    sc.read_per_lang("command", cfg.score.command);
    sc.read("endpoint", cfg.score.endpoint);
    sc.read("rate_limit_rps", cfg.score.rate_limit_rps);
    sc.finish();
    const auto& k = cfg.score.scorer;
    if (k != "model" && k != "stdio" && k != "http") sc.fail("scorer must be model, stdio or http");
  }
  if (const json* s = top.section("evaluate")) {
    Section ev(*s, "evaluate");
    auto& c = cfg.evaluate;
    ev.read("permutations", c.permutations);
    if (ev.has("perm_seed")) {
      std::uint64_t seed = 0;
      ev.read("perm_seed", seed);
      c.perm_seed = seed;
    }
    ev.read("min_gold_pass", c.min_gold_pass);
    ev.read("min_loo_corr", c.min_loo_corr);
    ev.read("baseline", c.baseline);
    ev.read("test_fraction", c.test_fraction);
    ev.read("lm_endpoint", c.lm_endpoint);
    ev.finish();
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) ev.fail("test_fraction must lie in (0, 1)");
  }
  top.finish();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  const json obj = jsonl::read_json(path);
  PipelineConfig cfg = config_from_json(obj, fs::absolute(path).parent_path());
  if (const char* mt = std::getenv("CDI_MT_ENDPOINT"); mt && *mt) {
    cfg.debias.backend = "http";
    cfg.debias.endpoint = mt;
  }
  if (const char* sc = std::getenv("CDI_SCORER_ENDPOINT"); sc && *sc) {
    cfg.score.scorer = "http";
    cfg.score.endpoint = sc;
  }
  return cfg;
}

std::uint64_t stage_seed(const PipelineConfig& cfg, std::string_view stage) {
  if (stage == "fabricate" && cfg.fabricate.seed) return *cfg.fabricate.seed;
  if (stage == "evaluate" && cfg.evaluate.perm_seed) return *cfg.evaluate.perm_seed;
  if (stage == "train" && cfg.train_seed_set) return cfg.train.seed;
  return derive_seed(cfg.seed, stage);
}

backtranslate::PivotConfig pivot_for(const PipelineConfig& cfg, Lang lang) {
  auto pivot = backtranslate::default_pivot(lang);
  if (const auto it = cfg.debias.pivot.find(lang); it != cfg.debias.pivot.end()) {
    pivot.pivot_lang = it->second;
  }
  pivot.validate();
  return pivot;
}

// ---------------------------------------------------------------------------
// Layout

fs::path sentences_path(const PipelineConfig& cfg, Lang lang) {
  return cfg.work_dir / lang_code(lang) / "sentences.jsonl";
}
fs::path manifest_path(const PipelineConfig& cfg, Lang lang) {
  return cfg.work_dir / lang_code(lang) / "manifest.json";
}
fs::path samples_path(const PipelineConfig& cfg, Lang lang) {
  return cfg.work_dir / lang_code(lang) / "samples.jsonl";
}
fs::path debiased_path(const PipelineConfig& cfg, Lang lang, DebiasMode mode) {
  return cfg.work_dir / lang_code(lang) / mode_name(mode) / "samples.jsonl";
}
fs::path model_path(const PipelineConfig& cfg, Lang lang, DebiasMode mode) {
  return cfg.work_dir / lang_code(lang) / mode_name(mode) / "model.json";
}
fs::path pairs_path(const PipelineConfig& cfg) { return cfg.work_dir / "pairs.jsonl"; }
fs::path scores_path(const PipelineConfig& cfg, DebiasMode mode) {
  return cfg.work_dir / mode_name(mode) / "scores.jsonl";
}
fs::path human_path(const PipelineConfig& cfg) { return cfg.work_dir / "human.jsonl"; }
fs::path report_path(const PipelineConfig& cfg, const std::string& baseline) {
  return cfg.work_dir / "eval" / baseline / "report.json";
}
fs::path table3_path(const PipelineConfig& cfg) { return cfg.work_dir / "table3.json"; }
fs::path scatter_path(const PipelineConfig& cfg) { return cfg.work_dir / "plot" / "scatter.jsonl"; }
fs::path topic_corr_path(const PipelineConfig& cfg) {
  return cfg.work_dir / "plot" / "topic_corr.json";
}
fs::path cache_root(const PipelineConfig& cfg) {
  return cfg.debias.cache_dir.empty() ? cfg.work_dir / "btcache" : cfg.debias.cache_dir;
}

// ---------------------------------------------------------------------------
// Stages

IngestSummary cmd_ingest(const PipelineConfig& cfg, Lang lang) {
  const auto& in = cfg.ingest;
  const auto roots_it = in.roots.find(lang);
  if (roots_it == in.roots.end() || roots_it->second.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no ingest roots configured for " + lang_code(lang));
  }
  std::unique_ptr<corpus::CategoryFetcher> fetcher;
  if (in.source_mode == "fixture") {
    const auto it = in.fixture_dir.find(lang);
    if (it == in.fixture_dir.end()) {
      throw Error(ErrorKind::InvalidArgument, "no fixture_dir configured for " + lang_code(lang));
    }
    fetcher = std::make_unique<corpus::FixtureFetcher>(require(it->second, "cdi-fixtures"));
  } else {
    const auto it = in.endpoint.find(lang);
    if (it == in.endpoint.end()) {
      throw Error(ErrorKind::InvalidArgument, "no endpoint configured for " + lang_code(lang));
    }
    fetcher = std::make_unique<corpus::MediaWikiFetcher>(it->second, in.rate_limit_rps,
                                                         in.category_prefix);
  }

  const auto topics = corpus::expand_category_tree(roots_it->second, lang, in.max_depth, *fetcher,
                                                   in.retries);
  std::vector<corpus::SkipRecord> skipped;
  const auto articles =
      corpus::fetch_articles(topics, *fetcher, {in.article_cap, in.retries}, &skipped);
  std::size_t failures = 0;
  for (const auto& s : skipped) {
    log::warn("skipped article " + s.title + ": " + s.detail);
    failures += s.reason == ErrorKind::FetchFailure;
  }
  if (failures > in.skip_budget) {
    throw Error(ErrorKind::FetchFailure, std::to_string(failures) +
                                             " articles failed to download, budget is " +
                                             std::to_string(in.skip_budget));
  }

  auto bounds = corpus::LengthBounds::defaults(lang);
  if (const auto it = in.min_len.find(lang); it != in.min_len.end()) bounds.min_len = it->second;
  if (const auto it = in.max_len.find(lang); it != in.max_len.end()) bounds.max_len = it->second;
  const auto sentences = corpus::build_sentences(articles, lang, bounds);
  if (sentences.empty()) throw Error(ErrorKind::EmptyDataset, "no sentences for " + lang_code(lang));

  corpus::write_sentences(sentences_path(cfg, lang), sentences);
  corpus::CorpusManifest manifest{lang, topics, sentences.size(), in.source_mode,
                                  manifest_timestamp()};
  jsonl::write_json(manifest_path(cfg, lang), corpus::to_json(manifest));
  log::info("ingest " + lang_code(lang) + ": " + std::to_string(topics.size()) + " topics, " +
            std::to_string(articles.size()) + " articles, " + std::to_string(sentences.size()) +
            " sentences");
  return {topics.size(), articles.size(), sentences.size(), skipped.size()};
}

FabricateSummary cmd_fabricate(const PipelineConfig& cfg, Lang lang) {
  const auto sentences = corpus::read_sentences(require(sentences_path(cfg, lang), "ingest"));
  for (const auto& s : sentences) {
    if (s.lang != lang) {
      throw Error(ErrorKind::LangMismatch, "sentence " + s.id + " is not " + lang_code(lang));
    }
  }
  const std::string code = lang_code(lang);
  const fs::path& res = cfg.resources_dir;
  const auto tagger = fabrication::LexiconTagger::load(res / ("adjectives." + code + ".txt"), lang);
  const auto lexicon = fabrication::AntonymLexicon::load(res / ("antonyms." + code + ".tsv"), lang);
  const auto stoplist =
      fabrication::CollocationModel::load_stoplist(res / ("collocations." + code + ".txt"));
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto colloc = fabrication::CollocationModel::build(texts, tagger.tokenizer(),
                                                           cfg.fabricate.colloc_threshold, stoplist);

  std::vector<LabeledSample> positives;
  std::map<std::string, std::vector<LabeledSample>> negatives;
  FabricateSummary summary;
  summary.sentences = sentences.size();
  for (const auto& s : sentences) {
    positives.push_back(fabrication::positive_sample(s));
    auto negs = fabrication::fabricate_negatives(s, lexicon, colloc, tagger);
    summary.negatives += negs.size();
    if (!negs.empty()) negatives[s.id] = std::move(negs);
  }
  const auto samples = fabrication::balance_dataset(positives, negatives, stage_seed(cfg, "fabricate"));
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "no sentence yielded a negative");
  fabrication::write_samples(samples_path(cfg, lang), samples);
  summary.samples = samples.size();
  log::info("fabricate " + code + ": " + std::to_string(summary.negatives) + " negatives, " +
            std::to_string(summary.samples) + " balanced samples");
  return summary;
}

std::size_t cmd_debias(const PipelineConfig& cfg, Lang lang, DebiasMode mode) {
  const auto samples = fabrication::read_samples(require(samples_path(cfg, lang), "fabricate"));
  const auto pivot = pivot_for(cfg, lang);
  const auto client = translation_client(cfg);
  std::optional<backtranslate::TranslationCache> cache;
  if (mode != DebiasMode::None) cache.emplace(cache_root(cfg), client->backend(), pivot);
  backtranslate::DebiasOptions opts;
  opts.cache = cache ? &*cache : nullptr;
  opts.retries = cfg.debias.retries;
  opts.parallelism = cfg.debias.parallelism;
  const auto out = backtranslate::debias_dataset(samples, mode, pivot, *client, opts);
  std::size_t applied = 0;
  for (const auto& s : out) applied += s.bt_applied;
  fabrication::write_samples(debiased_path(cfg, lang, mode), out);
  log::info("debias " + lang_code(lang) + " " + mode_name(mode) + ": " + std::to_string(applied) +
            " of " + std::to_string(out.size()) + " samples round-tripped");
  return applied;
}

std::vector<std::string> cmd_translate_statements(const PipelineConfig& cfg,
                                                  const fs::path& statements) {
  const auto input = read_statements(require(statements, "cdi-fixtures"));
  const auto client = translation_client(cfg);
  std::vector<std::string> dropped;
  const auto pairs = backtranslate::translate_pairs(input, *client, cfg.debias.retries, &dropped);
  if (pairs.empty()) throw Error(ErrorKind::TranslationFailure, "no statement could be translated");
  write_pairs(pairs_path(cfg), pairs);
  log::info("translated " + std::to_string(pairs.size()) + " statements, dropped " +
            std::to_string(dropped.size()));
  return dropped;
}

classifier::CultureModel cmd_train(const PipelineConfig& cfg, Lang lang, DebiasMode mode) {
  const auto samples = fabrication::read_samples(require(debiased_path(cfg, lang, mode), "debias"));
  std::vector<double> losses;
  const auto model = classifier::train(samples, train_config(cfg), &losses);
  classifier::save_model(model_path(cfg, lang, mode), model);
  log::info("train " + lang_code(lang) + " " + mode_name(mode) + ": " +
            std::to_string(samples.size()) + " samples, final loss " +
            (losses.empty() ? std::string("n/a") : std::to_string(losses.back())));
  return model;
}

std::vector<scoring::ScorePair> cmd_score(const PipelineConfig& cfg, DebiasMode mode) {
  const auto pairs = read_pairs(require(pairs_path(cfg), "debias --pairs-from"));
  std::map<Lang, std::unique_ptr<classifier::Scorer>> scorers;
  for (Lang lang : {Lang::En, Lang::Cn}) {
    const auto& sc = cfg.score;
    if (sc.scorer == "model") {
      scorers[lang] = std::make_unique<classifier::ModelScorer>(
          classifier::load_model(require(model_path(cfg, lang, mode), "train")));
    } else if (sc.scorer == "stdio") {
      const auto it = sc.command.find(lang);
      if (it == sc.command.end()) {
        throw Error(ErrorKind::InvalidArgument, "no scorer command for " + lang_code(lang));
      }
      scorers[lang] = std::make_unique<classifier::StdioScorer>(it->second);
    } else {
      if (sc.endpoint.empty()) throw Error(ErrorKind::InvalidArgument, "no scorer endpoint");
      scorers[lang] = std::make_unique<classifier::HttpScorer>(sc.endpoint + "/" + lang_code(lang),
                                                               sc.rate_limit_rps);
    }
  }
  std::vector<scoring::ScorePair> scores;
  scores.reserve(pairs.size());
  if (cfg.score.scorer == "model") {
    const auto& en = static_cast<const classifier::ModelScorer&>(*scorers[Lang::En]).model();
    const auto& cn = static_cast<const classifier::ModelScorer&>(*scorers[Lang::Cn]).model();
    for (const auto& p : pairs) scores.push_back(scoring::score_pair(p, en, cn));
  } else {
    for (const auto& p : pairs) {
      scores.push_back(scoring::score_pair(p, *scorers[Lang::En], *scorers[Lang::Cn]));
    }
  }
  scoring::write_scores(scores_path(cfg, mode), scores);
  log::info("scored " + std::to_string(scores.size()) + " pairs with " + cfg.score.scorer +
            " scorers (" + mode_name(mode) + ")");
  return scores;
}

HumanSide cmd_human(const PipelineConfig& cfg) {
  const auto rows = scoring::read_annotations(require(cfg.annotations, "cdi-fixtures"));
  std::vector<scoring::GoldItem> gold;
  if (!cfg.gold.empty() && fs::exists(cfg.gold)) gold = scoring::read_gold(cfg.gold);
  std::vector<std::string> gold_ids;
  for (const auto& g : gold) gold_ids.push_back(g.pair_id);
  const std::set<std::string> gold_set(gold_ids.begin(), gold_ids.end());

  const auto sets = scoring::group_annotations(rows);
  const evaluation::FilterConfig filter{cfg.evaluate.min_gold_pass, cfg.evaluate.min_loo_corr};
  HumanSide out;
  std::map<Lang, std::set<std::string>> keep;
  for (Lang lang : {Lang::En, Lang::Cn}) {
    out.retained[lang] = evaluation::filter_annotators(sets, lang, gold, filter);
    keep[lang] = {out.retained[lang].begin(), out.retained[lang].end()};
    out.matrices[lang] =
        evaluation::build_matrix(sets, lang, gold_ids).select(out.retained[lang]);
    log::info("annotators " + lang_code(lang) + ": kept " +
              std::to_string(out.retained[lang].size()));
  }

  std::map<std::string, std::map<Lang, scoring::AnnotationSet>> by_pair;
  for (const auto& s : sets) {
    if (gold_set.count(s.pair_id)) continue;
    scoring::AnnotationSet kept{s.pair_id, s.culture, {}};
    for (const auto& j : s.judgments) {
      if (keep[s.culture].count(j.annotator_id)) kept.judgments.push_back(j);
    }
    by_pair[s.pair_id][s.culture] = std::move(kept);
  }
  for (const auto& [id, cultures] : by_pair) {
    if (cultures.size() != 2) {
      throw Error(ErrorKind::PairMismatch, "pair " + id + " lacks annotations from one culture");
    }
    out.records.push_back(scoring::human_difference(cultures.at(Lang::En), cultures.at(Lang::Cn)));
  }
  scoring::write_human(human_path(cfg), out.records);
  return out;
}

evaluation::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& baseline) {
  const HumanSide human = cmd_human(cfg);
  std::vector<scoring::ScorePair> scores;
  std::string model_id;
  if (baseline == "cdi" || baseline == "weak-cdi") {
    const auto path = scores_path(cfg, baseline == "cdi" ? DebiasMode::Both : DebiasMode::None);
    scores = scoring::read_scores(require(path, "score"));
    model_id = baseline + ":" + file_digest(path);
  } else if (baseline == "random") {
    const std::uint64_t seed = stage_seed(cfg, "random-baseline");
    const auto [en, cn] = evaluation::random_baseline(human.records.size(), seed);
    for (std::size_t i = 0; i < human.records.size(); ++i) {
      scores.push_back(scoring::make_score_pair(human.records[i].pair_id, en[i], cn[i]));
    }
    model_id = "random:" + text::hex64(seed);
  } else if (baseline == "lm") {
    const auto pairs = read_pairs(require(pairs_path(cfg), "debias --pairs-from"));
    std::map<Lang, std::vector<std::string>> texts;
    for (const auto& p : pairs) {
      texts[Lang::En].push_back(p.en_text);
      texts[Lang::Cn].push_back(p.cn_text);
    }
    std::map<Lang, std::vector<double>> mp;
    for (Lang lang : {Lang::En, Lang::Cn}) {
      std::unique_ptr<evaluation::LogProbScorer> lm;
      if (!cfg.evaluate.lm_endpoint.empty()) {
        lm = std::make_unique<evaluation::HttpLogProbScorer>(cfg.evaluate.lm_endpoint + "/" +
                                                             lang_code(lang));
      } else {
        std::vector<std::string> corpus;
        for (const auto& s : corpus::read_sentences(require(sentences_path(cfg, lang), "ingest"))) {
          corpus.push_back(s.text);
        }
        lm = std::make_unique<evaluation::UnigramLM>(lang, corpus);
      }
      mp[lang] = evaluation::lm_baseline(texts[lang], lang, *lm);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      scores.push_back(scoring::make_score_pair(pairs[i].pair_id, mp[Lang::En][i], mp[Lang::Cn][i]));
    }
    model_id = cfg.evaluate.lm_endpoint.empty() ? "lm:unigram" : "lm:" + cfg.evaluate.lm_endpoint;
  } else {
    throw Error(ErrorKind::InvalidArgument,
                "baseline must be random, lm, weak-cdi or cdi, got " + baseline);
  }

  const evaluation::PermutationConfig perm{cfg.evaluate.permutations, stage_seed(cfg, "evaluate")};
  auto report = evaluation::make_report(model_id, baseline, scores, human.records, perm);
  for (const auto& [lang, ids] : human.retained) report.retained_annotators[lang_code(lang)] = ids;

  auto agreement = [&](const evaluation::AnnotatorMatrix& m, const std::string& key) {
    try {
      report.inter_annotator[key] = {
          evaluation::inter_annotator_agreement(m, evaluation::CorrKind::Pearson, perm),
          evaluation::inter_annotator_agreement(m, evaluation::CorrKind::Spearman, perm)};
    } catch (const Error& e) {
      log::warn("no inter-annotator agreement for " + key + ": " + e.what());
    }
  };
  const auto& en = human.matrices.at(Lang::En);
  const auto& cn = human.matrices.at(Lang::Cn);
  agreement(en, "en");
  agreement(cn, "cn");
  agreement(evaluation::difference_matrix(en, cn), "difference");

  jsonl::write_json(report_path(cfg, baseline), evaluation::to_json(report));
  log::info("evaluate " + baseline + ": difference pearson " +
            std::to_string(report.difference.pearson.r));
  return report;
}

std::map<Lang, evaluation::MatrixResult> cmd_matrix(const PipelineConfig& cfg,
                                                    const std::vector<Lang>& langs) {
  const auto client = translation_client(cfg);
  std::map<Lang, evaluation::MatrixResult> out;
  json table = json::object();
  for (Lang lang : langs) {
    const auto samples = fabrication::read_samples(require(samples_path(cfg, lang), "fabricate"));
    evaluation::MatrixConfig mc;
    mc.train = train_config(cfg);
    mc.pivot = pivot_for(cfg, lang);
    mc.test_fraction = cfg.evaluate.test_fraction;
    mc.split_seed = stage_seed(cfg, "split");
    backtranslate::TranslationCache cache(cache_root(cfg), client->backend(), mc.pivot);
    mc.debias.cache = &cache;
    mc.debias.retries = cfg.debias.retries;
    mc.debias.parallelism = cfg.debias.parallelism;
    out[lang] = evaluation::run_matrix(samples, *client, mc);
    table[lang_code(lang)] = evaluation::to_json(out[lang]);
  }
  jsonl::write_json(table3_path(cfg), table);
  return out;
}

// ---------------------------------------------------------------------------
// Plot data

std::vector<ScatterRecord> scatter_records(const std::vector<scoring::ScorePair>& scores,
                                           const std::vector<StatementPair>& pairs,
                                           const std::vector<std::string>& topics) {
  std::map<std::string, std::string> topic_of;
  std::set<std::string> known;
  for (const auto& p : pairs) {
    topic_of[p.pair_id] = p.topic;
    known.insert(p.topic);
  }
  for (const auto& t : topics) {
    if (!known.count(t)) throw Error(ErrorKind::UnknownTopic, "no pair has topic " + t);
  }
  const std::set<std::string> wanted(topics.begin(), topics.end());
  std::vector<ScatterRecord> out;
  for (const auto& s : scores) {
    const auto it = topic_of.find(s.pair_id);
    if (it == topic_of.end()) throw Error(ErrorKind::PairMismatch, "no pair for score " + s.pair_id);
    if (!wanted.empty() && !wanted.count(it->second)) continue;
    out.push_back({s.pair_id, it->second, s.mp_en, s.mp_cn});
  }
  return out;
}

std::map<std::string, TopicCorrelation> topic_correlations(const std::vector<ScatterRecord>& records) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_topic;
  for (const auto& r : records) {
    by_topic[r.topic].first.push_back(r.x);
    by_topic[r.topic].second.push_back(r.y);
  }
  std::map<std::string, TopicCorrelation> out;
  for (const auto& [topic, xy] : by_topic) {
    TopicCorrelation tc;
    tc.n = xy.first.size();
    try {
      tc.pearson = evaluation::pearson_r(xy.first, xy.second);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput) throw;
    }
    out[topic] = tc;
  }
  return out;
}

json to_json(const ScatterRecord& r) {
  return {{"pair_id", r.pair_id}, {"topic", r.topic}, {"x", r.x}, {"y", r.y}};
}

void cmd_plotdata(const PipelineConfig& cfg, DebiasMode mode, const std::vector<std::string>& topics) {
  const auto scores = scoring::read_scores(require(scores_path(cfg, mode), "score"));
  const auto pairs = read_pairs(require(pairs_path(cfg), "debias --pairs-from"));
  const auto records = scatter_records(scores, pairs, topics);
  std::vector<json> lines;
  for (const auto& r : records) lines.push_back(to_json(r));
  jsonl::write_lines(scatter_path(cfg), lines);
  json corr = json::object();
  for (const auto& [topic, tc] : topic_correlations(records)) {
    corr[topic] = {{"n", tc.n},
                   {"pearson", tc.pearson ? jsonl::fixed6(*tc.pearson) : json(nullptr)}};
  }
  jsonl::write_json(topic_corr_path(cfg), corr);
}

}  // namespace cdi::pipeline
