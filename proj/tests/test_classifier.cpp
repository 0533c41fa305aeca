#include "doctest.h"

#include <thread>

#include "cdi/classifier.hpp"
#include "cdi/rng.hpp"
#include "httplib.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cdi;
using namespace cdi::classifier;

namespace {

LabeledSample sample(std::string id, std::string text, int label, Lang lang = Lang::En) {
  LabeledSample s;
  s.id = std::move(id);
  s.lang = lang;
  s.text = std::move(text);
  s.label = label;
  if (label == 0) {
    s.origin = fabrication::Origin::AntonymFlip;
    s.parent_id = "p";
    s.flipped_span = fabrication::FlippedSpan{0, 1, "x"};
  }
  return s;
}

// 20 samples; positives use one vocabulary, negatives another.
std::vector<LabeledSample> separable(Lang lang = Lang::En) {
  const std::vector<std::string> pos =
      lang == Lang::En ? std::vector<std::string>{"sun", "warm", "bright", "joy", "gold"}
                       : std::vector<std::string>{"日", "暖", "明", "喜", "金"};
  const std::vector<std::string> neg =
      lang == Lang::En ? std::vector<std::string>{"rain", "cold", "dark", "fear", "lead"}
                       : std::vector<std::string>{"雨", "冷", "暗", "怕", "铅"};
  Rng rng(3);
  std::vector<LabeledSample> out;
  for (int i = 0; i < 20; ++i) {
    const auto& vocab = i % 2 ? neg : pos;
    std::string t;
    for (int k = 0; k < 4; ++k) {
      if (lang == Lang::En && k) t += ' ';
      t += vocab[rng.below(vocab.size())];
    }
    out.push_back(sample("s" + std::to_string(i), t, i % 2 ? 0 : 1, lang));
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.hash_bits = 12;
  c.epochs = 10;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("featurize enumerates hashed n-grams") {
  TrainConfig c;
  const auto fv = featurize("a b", Lang::En, c);
  CHECK(fv.indices.size() <= 3);
  CHECK(ngrams("a b", Lang::En, c) == std::vector<std::string>{"a", "a b", "b"});
  CHECK_THROWS_AS(featurize("   ", Lang::En, c), Error);
  CHECK(ngrams("今天 好", Lang::Cn, c) == std::vector<std::string>{"今", "今 天", "天", "天 好", "好"});
  CHECK(tokens("The CAT", Lang::En, 128) == std::vector<std::string>{"the", "cat"});
  CHECK(tokens("a b c d", Lang::En, 2).size() == 2);
  CHECK(bucket("a", 20) == (0xaf63dc4c8601ec8cULL & 0xfffff));
}

TEST_CASE("n-grams match a brute-force enumerator") {
  Rng rng(1);
  const std::vector<std::string> vocab = {"x", "y", "z", "w"};
  for (int trial = 0; trial < 100; ++trial) {
    TrainConfig c;
    c.ngram_max = 1 + static_cast<int>(rng.below(4));
    std::vector<std::string> toks;
    std::string t;
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) {
      toks.push_back(vocab[rng.below(vocab.size())]);
      t += (i ? "  " : "") + toks.back();
    }
    auto got = ngrams(t, Lang::En, c);
    auto want = oracle::ngrams(toks, c.ngram_max);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);

    const auto fv = featurize(t, Lang::En, c);
    std::uint32_t total = 0;
    for (std::size_t k = 0; k < fv.indices.size(); ++k) {
      if (k) CHECK(fv.indices[k - 1] < fv.indices[k]);
      CHECK(fv.values[k] > 0);
      total += fv.values[k];
    }
    CHECK(total == want.size());
  }
}

TEST_CASE("training separates a separable toy set") {
  const auto data = separable();
  std::vector<double> losses;
  const auto m = train(data, small_config(), &losses);
  CHECK(evaluate_f1(m, data).accuracy == 1.0);
  CHECK(predict_score(m, data[0].text) > 0.5);
  for (std::size_t e = 1; e < losses.size(); ++e) CHECK(losses[e] <= losses[e - 1]);

  const auto cn = separable(Lang::Cn);
  CHECK(evaluate_f1(train(cn, small_config()), cn).accuracy == 1.0);
}

TEST_CASE("training is deterministic and guarded") {
  const auto data = separable();
  const auto a = train(data, small_config());
  const auto b = train(data, small_config());
  CHECK(a == b);
  CHECK(to_json(a).dump() == to_json(b).dump());
  auto other = small_config();
  other.seed = 8;
  CHECK_FALSE(train(data, other).weights == a.weights);

  std::vector<LabeledSample> pos;
  for (const auto& s : data) {
    if (s.label == 1) pos.push_back(s);
  }
  try {
    train(pos, small_config());
    FAIL("expected SingleClassData");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingleClassData);
  }
  CHECK_THROWS_AS(train({}, small_config()), Error);
  auto mixed = data;
  mixed.push_back(sample("c", "中文", 1, Lang::Cn));
  CHECK_THROWS_AS(train(mixed, small_config()), Error);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(data, bad), Error);
  bad = TrainConfig{};
  bad.hash_bits = 31;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("training one culture leaves the other untouched") {
  const auto cn_model = train(separable(Lang::Cn), small_config());
  const std::string before = to_json(cn_model).dump();
  train(separable(Lang::En), small_config());
  CHECK(to_json(cn_model).dump() == before);
}

TEST_CASE("prediction") {
  const auto zero = zero_model(Lang::En, small_config());
  CHECK(predict_score(zero, "anything") == 0.5);
  const auto m = train(separable(), small_config());
  const double s1 = predict_score(m, "sun warm");
  CHECK(s1 == predict_score(m, "sun warm"));
  CHECK_THROWS_AS(predict_score(m, "sun", Lang::Cn), Error);
  CHECK(logistic(1000) < 1.0);
  CHECK(logistic(-1000) > 0.0);
  CHECK(logistic(0) == 0.5);
}

TEST_CASE("f1 arithmetic") {
  // TP=2, FP=1, FN=1, TN=1.
  const auto r = f1_scores({1, 1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.2, 0.1});
  CHECK(r.f1_positive == doctest::Approx(2.0 * 2 / (2 * 2 + 1 + 1)));
  CHECK(r.f1_negative == doctest::Approx(2.0 * 1 / (2 * 1 + 1 + 1)));
  CHECK(r.accuracy == doctest::Approx(0.6));
  const auto all = f1_scores({1, 0}, {0.9, 0.1});
  CHECK(all.f1_positive == 1.0);
  CHECK(all.f1_negative == 1.0);
  const auto none = f1_scores({1, 0}, {0.1, 0.9});
  CHECK(none.f1_positive == 0.0);
  CHECK(none.f1_negative == 0.0);
  CHECK(f1_scores({1}, {0.5}).f1_positive == 0.0);  // 0.5 is not above the threshold
  CHECK_THROWS_AS(f1_scores({}, {}), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    TrainConfig c;
    c.hash_bits = 8;
    std::vector<FeatureVector> x;
    std::vector<int> y;
    for (int i = 0; i < 6; ++i) {
      std::string t;
      for (int k = 0; k < 5; ++k) t += "w" + std::to_string(rng.below(30)) + " ";
      x.push_back(featurize(t, Lang::En, c));
      y.push_back(static_cast<int>(rng.below(2)));
    }
    std::vector<double> w(256);
    for (auto& v : w) v = rng.uniform() - 0.5;
    const double b = rng.uniform() - 0.5;
    const double l2 = 0.1;
    std::vector<double> gw;
    double gb;
    loss_and_gradient(x, y, w, b, l2, &gw, &gb);

    std::vector<double> theta = w;
    theta.push_back(b);
    auto f = [&](const std::vector<double>& t) {
      std::vector<double> ww(t.begin(), t.end() - 1);
      return loss_and_gradient(x, y, ww, t.back(), l2, nullptr, nullptr);
    };
    std::vector<std::size_t> coords = {256};
    for (const auto& fv : x) coords.push_back(fv.indices.front());
    for (std::size_t j : coords) {
      const double analytic = j == 256 ? gb : gw[j];
      const double numeric = oracle::central_difference(f, theta, j, 1e-5);
      CHECK(std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-8) <
            1e-6);
    }
  }
}

TEST_CASE("model file round trip") {
  testing::TempDir dir;
  const auto data = separable();
  const auto m = train(data, small_config());
  CHECK(m.train_fingerprint == fingerprint(data));
  save_model(dir / "m.json", m);
  const auto back = load_model(dir / "m.json");
  CHECK(back == m);
  for (const auto& s : data) CHECK(predict_score(back, s.text) == predict_score(m, s.text));

  auto j = to_json(m);
  j["version"] = 99;
  CHECK_THROWS_AS(model_from_json(j, "x"), Error);
  j = to_json(m);
  j["weights"].push_back(nlohmann::json::array({1u << 20, 0.5}));
  CHECK_THROWS_AS(model_from_json(j, "x"), Error);
  j = to_json(m);
  j["extra"] = 1;
  CHECK_THROWS_AS(model_from_json(j, "x"), Error);
}

TEST_CASE("stdio scorer") {
  StdioScorer fixed("while read line; do echo '{\"score\": 0.42}'; done");
  CHECK(external_score(fixed, "hello") == 0.42);
  CHECK(external_score(fixed, "again") == 0.42);

  StdioScorer high("while read line; do echo '{\"score\": 1.7}'; done");
  try {
    external_score(high, "x");
    FAIL("expected MalformedScore");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedScore);
  }
  StdioScorer junk("while read line; do echo 'nope'; done");
  CHECK_THROWS_AS(external_score(junk, "x"), Error);

  StdioScorer gone("exit 0");
  try {
    external_score(gone, "x");
    FAIL("expected ScorerUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScorerUnavailable);
  }
}

TEST_CASE("http scorer") {
  httplib::Server srv;
  srv.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const double s = body["text"] == "bad" ? -0.1 : 0.25;
    res.set_content(nlohmann::json{{"score", s}}.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  HttpScorer scorer("http://127.0.0.1:" + std::to_string(port) + "/score");
  CHECK(external_score(scorer, "ok") == 0.25);
  CHECK_THROWS_AS(external_score(scorer, "bad"), Error);
  srv.stop();
  th.join();

  HttpScorer dead("http://127.0.0.1:1/score", 0, 1);
  try {
    dead.score("x");
    FAIL("expected ScorerUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScorerUnavailable);
  }
}

TEST_CASE("model scorer agrees with predict_score") {
  const auto m = train(separable(), small_config());
  ModelScorer s(m);
  CHECK(s.score("sun cold") == predict_score(m, "sun cold"));
  CHECK(evaluate_f1(s, separable()).accuracy == evaluate_f1(m, separable()).accuracy);
}
