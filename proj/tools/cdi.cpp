// Command line driver for the cultural difference pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdi/error.hpp"
#include "cdi/log.hpp"
#include "cdi/pipeline.hpp"

namespace fs = std::filesystem;
using cdi::Lang;
using cdi::pipeline::DebiasMode;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  input error (bad arguments or config, missing or unusable input,\n"
    "     unresolvable root category, empty data, degenerate statistics)\n"
    "  3  external service error (fetch, translation or scorer failure,\n"
    "     malformed scorer reply)\n"
    "  4  schema violation in an interchange file\n";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string work;
  std::string lang;
  std::string mode;
  bool verbose = false;
  bool quiet = false;
};

std::vector<Lang> langs_of(const std::string& lang) {
  if (lang.empty()) return {Lang::En, Lang::Cn};
  return {cdi::parse_lang(lang)};
}

cdi::pipeline::PipelineConfig load(const Options& o) {
  auto cfg = cdi::pipeline::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.work.empty()) cfg.work_dir = fs::absolute(o.work);
  return cfg;
}

DebiasMode mode_of(const Options& o, const cdi::pipeline::PipelineConfig& cfg) {
  return o.mode.empty() ? cfg.debias.mode : cdi::backtranslate::parse_mode(o.mode);
}

void add_lang(CLI::App* cmd, Options& o) {
  cmd->add_option("--lang", o.lang, "en or cn (default: both)")->check(CLI::IsMember({"en", "cn"}));
}

void add_mode(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode, "none, negative-only or both (default: debias.mode)")
      ->check(CLI::IsMember({"none", "negative-only", "both"}));
}

void run_all(const cdi::pipeline::PipelineConfig& cfg) {
  namespace p = cdi::pipeline;
  for (Lang lang : {Lang::En, Lang::Cn}) {
    p::cmd_ingest(cfg, lang);
    p::cmd_fabricate(cfg, lang);
    for (DebiasMode mode : cdi::evaluation::kModes) {
      p::cmd_debias(cfg, lang, mode);
      p::cmd_train(cfg, lang, mode);
    }
  }
  p::cmd_translate_statements(cfg, cfg.statements);
  for (DebiasMode mode : cdi::evaluation::kModes) p::cmd_score(cfg, mode);
  for (const char* baseline : {"random", "lm", "weak-cdi", "cdi"}) p::cmd_evaluate(cfg, baseline);
  p::cmd_matrix(cfg, {Lang::En, Lang::Cn});
  p::cmd_plotdata(cfg, DebiasMode::Both, {});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cultural difference pipeline: corpus ingestion, negative fabrication, "
               "back-translation debiasing, culture models, scoring and evaluation"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "pipeline config (JSON)")->required();
  app.add_option("--seed", o.seed, "global seed, overrides the config");
  app.add_option("--work", o.work, "working directory, overrides work_dir");
  app.add_flag("-v,--verbose", o.verbose, "debug logging");
  app.add_flag("-q,--quiet", o.quiet, "warnings and errors only");

  auto* ingest = app.add_subcommand("ingest", "crawl categories and extract sentences");
  add_lang(ingest, o);

  auto* fabricate = app.add_subcommand("fabricate", "build balanced positive/negative samples");
  add_lang(fabricate, o);

  std::string pairs_from;
  auto* debias = app.add_subcommand("debias", "back-translate samples for one debias mode");
  add_lang(debias, o);
  add_mode(debias, o);
  debias->add_option("--pairs-from", pairs_from,
                     "translate English statements (JSONL) into pairs.jsonl instead");

  auto* train = app.add_subcommand("train", "train culture models");
  add_lang(train, o);
  add_mode(train, o);

  auto* score = app.add_subcommand("score", "score statement pairs with both culture models");
  add_mode(score, o);

  std::string baseline;
  bool matrix = false;
  auto* evaluate = app.add_subcommand("evaluate", "correlate model and human differences");
  evaluate->add_option("--baseline", baseline, "random, lm, weak-cdi or cdi (default: config)")
      ->check(CLI::IsMember({"random", "lm", "weak-cdi", "cdi"}));
  evaluate->add_flag("--matrix", matrix, "run the debias train/test grid and write table3.json");
  add_lang(evaluate, o);

  std::vector<std::string> topics;
  auto* plotdata = app.add_subcommand("plotdata", "per-pair scatter data and per-topic correlation");
  add_mode(plotdata, o);
  plotdata->add_option("--topics", topics, "topic filter (default: all)")->delimiter(',');

  app.add_subcommand("run", "every stage in order, all modes and baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cdi::log::set_level(o.verbose ? cdi::log::Level::Debug
                                : o.quiet ? cdi::log::Level::Warn : cdi::log::Level::Info);
  namespace p = cdi::pipeline;
  try {
    const auto cfg = load(o);
    if (ingest->parsed()) {
      for (Lang lang : langs_of(o.lang)) p::cmd_ingest(cfg, lang);
    } else if (fabricate->parsed()) {
      for (Lang lang : langs_of(o.lang)) p::cmd_fabricate(cfg, lang);
    } else if (debias->parsed()) {
      if (!pairs_from.empty()) {
        p::cmd_translate_statements(cfg, fs::absolute(pairs_from));
      } else {
        for (Lang lang : langs_of(o.lang)) p::cmd_debias(cfg, lang, mode_of(o, cfg));
      }
    } else if (train->parsed()) {
      for (Lang lang : langs_of(o.lang)) p::cmd_train(cfg, lang, mode_of(o, cfg));
    } else if (score->parsed()) {
      p::cmd_score(cfg, mode_of(o, cfg));
    } else if (evaluate->parsed()) {
      if (matrix) {
        p::cmd_matrix(cfg, langs_of(o.lang));
      } else {
        p::cmd_evaluate(cfg, baseline.empty() ? cfg.evaluate.baseline : baseline);
      }
    } else if (plotdata->parsed()) {
      p::cmd_plotdata(cfg, o.mode.empty() ? DebiasMode::Both : cdi::backtranslate::parse_mode(o.mode),
                      topics);
    } else {
      run_all(cfg);
    }
  } catch (const cdi::Error& e) {
    std::cerr << "cdi: " << e.what() << "\n";
    return cdi::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cdi: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
