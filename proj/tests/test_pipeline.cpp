#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"

#include "cdi/jsonl.hpp"
#include "cdi/pipeline.hpp"
#include "support.hpp"

using namespace cdi;
using namespace cdi::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;
using cdi::testing::TempDir;
using cdi::testing::slurp;
using cdi::testing::snapshot;

namespace {

const fs::path kData = CDI_DATA_DIR;

PipelineConfig fixture_config(const fs::path& work) {
  auto cfg = load_config(kData / "config.json");
  cfg.work_dir = work;
  return cfg;
}

scoring::ScorePair sp(const std::string& id, double en, double cn) {
  return scoring::make_score_pair(id, en, cn);
}

}  // namespace

TEST_CASE("config paths resolve against the config directory") {
  const json obj = {{"seed", 5},
                    {"work_dir", "out"},
                    {"statements", "in/statements.jsonl"},
                    {"ingest", {{"fixture_dir", {{"en", "c/en"}}}, {"roots", {{"en", {"A"}}}}}},
                    {"debias", {{"mode", "negative-only"}, {"pivot", {{"en", "fr"}}}}},
                    {"train", {{"epochs", 3}}}};
  const auto cfg = config_from_json(obj, "/base/dir");
  CHECK(cfg.seed == 5);
  CHECK(cfg.work_dir == fs::path("/base/dir/out"));
  CHECK(cfg.statements == fs::path("/base/dir/in/statements.jsonl"));
  CHECK(cfg.ingest.fixture_dir.at(Lang::En) == fs::path("/base/dir/c/en"));
  CHECK(cfg.ingest.roots.at(Lang::En) == std::vector<std::string>{"A"});
  CHECK(cfg.debias.mode == DebiasMode::NegativeOnly);
  CHECK(pivot_for(cfg, Lang::En).pivot_lang == "fr");
  CHECK(pivot_for(cfg, Lang::Cn).pivot_lang == "ja");
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.hash_bits == classifier::TrainConfig{}.hash_bits);
  CHECK_FALSE(cfg.train_seed_set);
  CHECK(scores_path(cfg, DebiasMode::Both) == fs::path("/base/dir/out/both/scores.jsonl"));
  CHECK(model_path(cfg, Lang::Cn, DebiasMode::None) == fs::path("/base/dir/out/cn/none/model.json"));
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(config_from_json({{"sede", 1}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"ingest", {{"max_dept", 1}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"train", {{"epoch", 1}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"debias", {{"mode", "all"}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"ingest", {{"roots", {{"fr", {"A"}}}}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"seed", "seven"}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"evaluate", {{"test_fraction", 1.5}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json({{"score", {{"scorer", "oracle"}}}}, "/"), Error);
  try {
    config_from_json({{"fabricate", {{"threshold", 3}}}}, "/");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
    CHECK(std::string(e.what()).find("threshold") != std::string::npos);
  }
}

TEST_CASE("stage seeds fan out from the global seed") {
  PipelineConfig cfg;
  cfg.seed = 42;
  // FNV-1a 64 of the stage names, computed independently.
  CHECK(stage_seed(cfg, "fabricate") == (42ULL ^ 0x9021a0d8b8026884ULL));
  CHECK(stage_seed(cfg, "train") == (42ULL ^ 0xdee795a6c5087209ULL));
  CHECK(stage_seed(cfg, "fabricate") != stage_seed(cfg, "train"));
  cfg.fabricate.seed = 7;
  CHECK(stage_seed(cfg, "fabricate") == 7);
  cfg.evaluate.perm_seed = 9;
  CHECK(stage_seed(cfg, "evaluate") == 9);
}

TEST_CASE("environment overrides the external endpoints") {
  TempDir dir;
  jsonl::write_json(dir / "c.json", json{{"debias", {{"backend", "mock-table"}}}});
  ::setenv("CDI_MT_ENDPOINT", "http://mt.example:1/translate", 1);
  ::setenv("CDI_SCORER_ENDPOINT", "http://scorer.example:2", 1);
  const auto cfg = load_config(dir / "c.json");
  ::unsetenv("CDI_MT_ENDPOINT");
  ::unsetenv("CDI_SCORER_ENDPOINT");
  CHECK(cfg.debias.backend == "http");
  CHECK(cfg.debias.endpoint == "http://mt.example:1/translate");
  CHECK(cfg.score.scorer == "http");
  CHECK(cfg.score.endpoint == "http://scorer.example:2");
  CHECK(cfg.work_dir == dir / "work");

  const auto plain = load_config(dir / "c.json");
  CHECK(plain.debias.backend == "mock-table");
  CHECK(plain.score.scorer == "model");
}

TEST_CASE("scatter records follow the topic filter") {
  const std::vector<StatementPair> pairs = {
      {"p1", "a", "甲", "tea"}, {"p2", "b", "乙", "tea"}, {"p3", "c", "丙", "rice"}};
  const std::vector<scoring::ScorePair> scores = {sp("p1", 0.2, 0.3), sp("p2", 0.6, 0.1),
                                                  sp("p3", 0.9, 0.9)};
  const auto all = scatter_records(scores, pairs, {});
  REQUIRE(all.size() == 3);
  CHECK(all[1] == ScatterRecord{"p2", "tea", 0.6, 0.1});
  const auto tea = scatter_records(scores, pairs, {"tea"});
  CHECK(tea.size() == 2);
  CHECK_THROWS_AS(scatter_records(scores, pairs, {"coffee"}), Error);
  try {
    scatter_records(scores, pairs, {"coffee"});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownTopic);
  }
  CHECK_THROWS_AS(scatter_records({sp("p9", 0.1, 0.1)}, pairs, {}), Error);
  CHECK(to_json(all[0]) == json{{"pair_id", "p1"}, {"topic", "tea"}, {"x", 0.2}, {"y", 0.3}});
}

TEST_CASE("per-topic correlation of the two model predictions") {
  std::vector<ScatterRecord> recs;
  const std::vector<double> xs = {0.1, 0.4, 0.5, 0.8};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    recs.push_back({"s" + std::to_string(i), "same", xs[i], xs[i]});
    recs.push_back({"a" + std::to_string(i), "anti", xs[i], 1.0 - xs[i]});
    recs.push_back({"f" + std::to_string(i), "flat", xs[i], 0.5});
  }
  const auto corr = topic_correlations(recs);
  REQUIRE(corr.size() == 3);
  CHECK(corr.at("same").n == 4);
  CHECK(*corr.at("same").pearson == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*corr.at("anti").pearson == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_FALSE(corr.at("flat").pearson.has_value());
}

TEST_CASE("ingest enforces the download failure budget") {
  httplib::Server svr;
  svr.Get("/w/api.php", [](const httplib::Request& req, httplib::Response& res) {
    json out;
    if (req.get_param_value("list") == "categorymembers") {
      json members = json::array();
      if (req.get_param_value("cmtype") == "page") {
        for (const char* t : {"Brie", "Edam", "Gouda"}) members.push_back({{"title", t}});
      }
      out["query"]["categorymembers"] = members;
    } else if (req.get_param_value("prop") == "extracts") {
      if (req.get_param_value("titles") != "Brie") {
        res.status = 500;
        return;
      }
      out["query"]["pages"]["1"] = {{"title", "Brie"},
                                    {"extract", "Brie is a soft cheese from France."}};
    } else {
      out["query"]["pages"]["5"] = {{"title", req.get_param_value("titles")}};
    }
    res.set_content(out.dump(), "application/json");
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  TempDir dir;
  PipelineConfig cfg;
  cfg.work_dir = dir.path();
  cfg.ingest.source_mode = "mediawiki";
  cfg.ingest.endpoint[Lang::En] = "http://127.0.0.1:" + std::to_string(port) + "/w/api.php";
  cfg.ingest.roots[Lang::En] = {"Cheese"};
  cfg.ingest.article_cap = 5;
  cfg.ingest.rate_limit_rps = 0;
  cfg.ingest.retries = 0;
  cfg.ingest.skip_budget = 1;
  try {
    cmd_ingest(cfg, Lang::En);
    FAIL("expected FetchFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FetchFailure);
    CHECK(exit_code(e.kind()) == 3);
  }
  CHECK_FALSE(fs::exists(sentences_path(cfg, Lang::En)));

  cfg.ingest.skip_budget = 2;
  const auto summary = cmd_ingest(cfg, Lang::En);
  CHECK(summary.articles == 1);
  CHECK(summary.skipped == 2);
  CHECK(summary.sentences == 1);
  svr.stop();
  th.join();
}

TEST_CASE("missing roots and inputs are input errors") {
  TempDir dir;
  auto cfg = fixture_config(dir.path());
  cfg.ingest.roots[Lang::En] = {"No such category"};
  try {
    cmd_ingest(cfg, Lang::En);
    FAIL("expected UnresolvableRoot");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnresolvableRoot);
    CHECK(exit_code(e.kind()) == 2);
  }
  try {
    cmd_fabricate(cfg, Lang::En);
    FAIL("expected a missing input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("cdi ingest") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_evaluate(cfg, "oracle"), Error);
}

TEST_CASE("fixture stages are deterministic, isolated and rerunnable") {
  TempDir dir;
  const auto cfg = fixture_config(dir.path());
  const auto first = cmd_ingest(cfg, Lang::En);
  CHECK(first.sentences == 500);
  const std::string sentences = slurp(sentences_path(cfg, Lang::En));
  const std::string manifest = slurp(manifest_path(cfg, Lang::En));
  cmd_ingest(cfg, Lang::En);
  CHECK(slurp(sentences_path(cfg, Lang::En)) == sentences);
  CHECK(slurp(manifest_path(cfg, Lang::En)) == manifest);
  CHECK(jsonl::read_json(manifest_path(cfg, Lang::En))["created_at"] == "1970-01-01T00:00:00Z");

  const auto fab = cmd_fabricate(cfg, Lang::En);
  CHECK(fab.samples == 2 * fab.sentences);
  const std::string samples = slurp(samples_path(cfg, Lang::En));
  fs::remove(samples_path(cfg, Lang::En));
  cmd_fabricate(cfg, Lang::En);
  CHECK(slurp(samples_path(cfg, Lang::En)) == samples);

  for (DebiasMode mode : {DebiasMode::None, DebiasMode::Both}) cmd_debias(cfg, Lang::En, mode);
  const std::string debiased = slurp(debiased_path(cfg, Lang::En, DebiasMode::Both));
  fs::remove_all(cache_root(cfg));
  fs::remove(debiased_path(cfg, Lang::En, DebiasMode::Both));
  cmd_debias(cfg, Lang::En, DebiasMode::Both);
  CHECK(slurp(debiased_path(cfg, Lang::En, DebiasMode::Both)) == debiased);
  CHECK(slurp(debiased_path(cfg, Lang::En, DebiasMode::None)) == samples);

  const auto none = cmd_train(cfg, Lang::En, DebiasMode::None);
  const auto both = cmd_train(cfg, Lang::En, DebiasMode::Both);
  CHECK(none.train_fingerprint != both.train_fingerprint);
  const std::string model = slurp(model_path(cfg, Lang::En, DebiasMode::Both));
  cmd_train(cfg, Lang::En, DebiasMode::Both);
  CHECK(slurp(model_path(cfg, Lang::En, DebiasMode::Both)) == model);
}

TEST_CASE("evaluate chain on the fixture world") {
  TempDir dir;
  const auto cfg = fixture_config(dir.path());
  for (Lang lang : {Lang::En, Lang::Cn}) {
    cmd_ingest(cfg, lang);
    cmd_fabricate(cfg, lang);
    cmd_debias(cfg, lang, DebiasMode::Both);
    cmd_train(cfg, lang, DebiasMode::Both);
  }
  CHECK(cmd_translate_statements(cfg, cfg.statements).empty());
  const auto scores = cmd_score(cfg, DebiasMode::Both);
  CHECK(scores.size() == read_pairs(pairs_path(cfg)).size());
  for (const auto& s : scores) CHECK(s.d_model == s.mp_en - s.mp_cn);

  const auto random = cmd_evaluate(cfg, "random");
  CHECK(random.n_pairs == scores.size());
  // Independent uniform scores: |r| has standard deviation about 1/sqrt(n).
  CHECK(std::abs(random.difference.pearson.r) < 4.0 / std::sqrt(double(random.n_pairs)));
  CHECK(random.retained_annotators.at("en").size() >= 18);
  CHECK(random.inter_annotator.count("difference") == 1);

  const auto report = cmd_evaluate(cfg, "cdi");
  CHECK(report.difference.pearson.r > random.difference.pearson.r);
  const json j = jsonl::read_json(report_path(cfg, "cdi"));
  CHECK(j["baseline"] == "cdi");
  CHECK(j["n_pairs"] == scores.size());
  CHECK(scoring::read_human(human_path(cfg)).size() == scores.size());

  cmd_plotdata(cfg, DebiasMode::Both, {});
  std::size_t lines = 0;
  jsonl::for_each_line(scatter_path(cfg), [&](const json&, const std::string&) { ++lines; });
  CHECK(lines == scores.size());
  CHECK(jsonl::read_json(topic_corr_path(cfg)).size() == 10);
  CHECK_THROWS_AS(cmd_plotdata(cfg, DebiasMode::Both, {"knitting"}), Error);

  const auto before = snapshot(cfg.work_dir);
  cmd_evaluate(cfg, "cdi");
  cmd_evaluate(cfg, "random");
  cmd_plotdata(cfg, DebiasMode::Both, {});
  CHECK(snapshot(cfg.work_dir) == before);
}
