#include "doctest.h"

#include <map>
#include <queue>
#include <set>
#include <thread>

#include "cdi/corpus.hpp"
#include "cdi/rng.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace cdi;
using namespace cdi::corpus;

namespace {

class MapFetcher : public CategoryFetcher {
 public:
  std::map<std::string, std::vector<std::string>> subcats;
  std::map<std::string, std::vector<std::string>> pages;
  std::map<std::string, std::string> texts;
  std::set<std::string> extra_categories;
  int fail_first_calls = 0;  // transient failures before any call succeeds
  std::set<std::string> always_fail;
  int calls = 0;

  bool category_exists(const std::string& c) override {
    maybe_fail(c);
    return subcats.count(c) || pages.count(c) || extra_categories.count(c) ||
           std::any_of(subcats.begin(), subcats.end(), [&](const auto& kv) {
             return std::find(kv.second.begin(), kv.second.end(), c) != kv.second.end();
           });
  }
  std::vector<std::string> subcategories(const std::string& c) override {
    maybe_fail(c);
    auto it = subcats.find(c);
    return it == subcats.end() ? std::vector<std::string>{} : it->second;
  }
  std::vector<std::string> articles(const std::string& c) override {
    maybe_fail(c);
    auto it = pages.find(c);
    return it == pages.end() ? std::vector<std::string>{} : it->second;
  }
  std::string content(const std::string& t) override {
    maybe_fail(t);
    return texts.at(t);
  }

 private:
  void maybe_fail(const std::string& key) {
    ++calls;
    if (always_fail.count(key)) throw Error(ErrorKind::FetchFailure, key);
    if (fail_first_calls > 0) {
      --fail_first_calls;
      throw Error(ErrorKind::FetchFailure, "transient");
    }
  }
};

// Independent closure: plain BFS over the adjacency map with a depth cap.
std::map<std::string, int> bfs_oracle(const std::map<std::string, std::vector<std::string>>& g,
                                      const std::string& root, int max_depth) {
  std::map<std::string, int> depth{{root, 0}};
  std::queue<std::string> q;
  q.push(root);
  while (!q.empty()) {
    const std::string u = q.front();
    q.pop();
    if (depth[u] == max_depth) continue;
    auto it = g.find(u);
    if (it == g.end()) continue;
    for (const auto& v : it->second) {
      if (!depth.count(v)) {
        depth[v] = depth[u] + 1;
        q.push(v);
      }
    }
  }
  return depth;
}

}  // namespace

TEST_CASE("depth-0 expansion returns the root only") {
  MapFetcher f;
  f.subcats["Foods"] = {"Cheese", "Noodles"};
  const auto nodes = expand_category_tree({"Foods"}, Lang::En, 0, f);
  REQUIRE(nodes.size() == 1);
  CHECK(nodes[0].id == "Foods");
  CHECK(nodes[0].depth == 0);
  CHECK_FALSE(nodes[0].parent_id.has_value());
}

TEST_CASE("cycles terminate with first-discovery depth") {
  MapFetcher f;
  f.subcats["A"] = {"B"};
  f.subcats["B"] = {"A"};
  const auto nodes = expand_category_tree({"A"}, Lang::En, 5, f);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].id == "A");
  CHECK(nodes[0].depth == 0);
  CHECK(nodes[1].id == "B");
  CHECK(nodes[1].depth == 1);
  CHECK(nodes[1].parent_id == std::optional<std::string>("A"));
}

TEST_CASE("binary tree of depth two yields seven nodes") {
  MapFetcher f;
  f.subcats["top"] = {"l", "r"};
  f.subcats["l"] = {"ll", "lr"};
  f.subcats["r"] = {"rl", "rr"};
  const auto nodes = expand_category_tree({"top"}, Lang::En, 2, f);
  REQUIRE(nodes.size() == 7);
  std::map<std::string, int> depth;
  for (const auto& n : nodes) depth[n.id] = n.depth;
  CHECK(depth == std::map<std::string, int>{{"top", 0}, {"l", 1}, {"r", 1}, {"ll", 2},
                                            {"lr", 2}, {"rl", 2}, {"rr", 2}});
  // sorted by (depth, title)
  CHECK(nodes[1].id == "l");
  CHECK(nodes[3].id == "ll");
}

TEST_CASE("expansion matches a BFS oracle on random graphs and is idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    MapFetcher f;
    const int n = 2 + static_cast<int>(rng.below(15));
    for (int e = 0; e < n * 2; ++e) {
      const std::string u = "c" + std::to_string(rng.below(n));
      const std::string v = "c" + std::to_string(rng.below(n));
      auto& kids = f.subcats[u];
      if (std::find(kids.begin(), kids.end(), v) == kids.end()) kids.push_back(v);
    }
    f.extra_categories.insert("c0");
    const int max_depth = static_cast<int>(rng.below(5));
    const auto nodes = expand_category_tree({"c0"}, Lang::Cn, max_depth, f);
    const auto oracle = bfs_oracle(f.subcats, "c0", max_depth);
    REQUIRE(nodes.size() == oracle.size());
    std::set<std::string> ids;
    for (const auto& node : nodes) {
      CHECK(ids.insert(node.id).second);
      CHECK(oracle.at(node.id) == node.depth);
      CHECK((node.depth == 0) == !node.parent_id.has_value());
    }
    CHECK(expand_category_tree({"c0"}, Lang::Cn, max_depth, f) == nodes);
  }
}

TEST_CASE("unresolvable root and fetch failures") {
  MapFetcher f;
  f.subcats["A"] = {"B"};
  CHECK_THROWS_AS(expand_category_tree({"Nope"}, Lang::En, 1, f), Error);
  try {
    expand_category_tree({"Nope"}, Lang::En, 1, f);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnresolvableRoot);
  }

  f.fail_first_calls = 2;
  CHECK(expand_category_tree({"A"}, Lang::En, 1, f, 2).size() == 2);

  f.always_fail.insert("B");
  try {
    expand_category_tree({"A"}, Lang::En, 3, f, 1);
    FAIL("expected FetchFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FetchFailure);
    CHECK(std::string(e.what()).find("B") != std::string::npos);
  }
}

TEST_CASE("fetch_articles caps, orders and deduplicates") {
  MapFetcher f;
  f.pages["T1"] = {"gamma", "alpha", "beta"};
  f.pages["T2"] = {"alpha", "delta"};
  f.texts = {{"alpha", "A."}, {"beta", "B."}, {"gamma", "C."}, {"delta", "D."}};
  const std::vector<TopicNode> t1{{"T1", "T1", Lang::En, 0, std::nullopt}};

  CHECK(fetch_articles({}, f, {2, 0}).empty());

  const auto capped = fetch_articles(t1, f, {2, 0});
  REQUIRE(capped.size() == 2);
  CHECK(capped[0].title == "alpha");
  CHECK(capped[1].title == "beta");

  const std::vector<TopicNode> both{{"T1", "T1", Lang::En, 0, std::nullopt},
                                    {"T2", "T2", Lang::En, 0, std::nullopt}};
  const auto arts = fetch_articles(both, f, {10, 0});
  int alpha = 0;
  for (const auto& a : arts) {
    if (a.title == "alpha") {
      ++alpha;
      CHECK(a.topic_id == "T1");
    }
  }
  CHECK(alpha == 1);
  CHECK(arts.size() == 4);
}

TEST_CASE("fetch_articles skips failing and empty articles") {
  MapFetcher f;
  f.pages["T"] = {"bad", "empty", "good"};
  f.texts = {{"bad", "x"}, {"empty", "  \n "}, {"good", "Fine."}};
  f.always_fail.insert("bad");
  std::vector<SkipRecord> skipped;
  const auto arts =
      fetch_articles({{"T", "T", Lang::En, 0, std::nullopt}}, f, {5, 1}, &skipped);
  REQUIRE(arts.size() == 1);
  CHECK(arts[0].title == "good");
  REQUIRE(skipped.size() == 2);
  CHECK(skipped[0].reason == ErrorKind::FetchFailure);
  CHECK(skipped[1].reason == ErrorKind::EmptyArticle);
}

TEST_CASE("sentence segmentation examples") {
  CHECK(extract_sentences("Hello world. Bye.", Lang::En, {1, 100}) ==
        std::vector<std::string>{"Hello world.", "Bye."});
  CHECK(extract_sentences("今天下雨。明天晴。", Lang::Cn, {1, 100}) ==
        std::vector<std::string>{"今天下雨。", "明天晴。"});
  CHECK(extract_sentences("He lives in the U.S. since 2001.", Lang::En, {1, 100}).size() == 1);
  CHECK(extract_sentences("Mr. Smith met Dr. Jones at 3.5 p.m. today! Really? Yes.", Lang::En,
                          {1, 100}) == std::vector<std::string>{
                                           "Mr. Smith met Dr. Jones at 3.5 p.m. today!",
                                           "Really?", "Yes."});
  CHECK(extract_sentences("", Lang::En, {1, 100}).empty());
}

TEST_CASE("length bounds drop fragments") {
  const auto en = extract_sentences("Too short. This sentence has exactly six tokens.", Lang::En,
                                    LengthBounds::defaults(Lang::En));
  CHECK(en == std::vector<std::string>{"This sentence has exactly six tokens."});
  const auto cn = extract_sentences("短句。这是一个足够长的中文句子用于测试。", Lang::Cn,
                                    LengthBounds::defaults(Lang::Cn));
  CHECK(cn == std::vector<std::string>{"这是一个足够长的中文句子用于测试。"});
}

TEST_CASE("segmentation keeps every non-space character in order") {
  Rng rng(3);
  const std::vector<std::string> pieces = {"word", "U.S.", "etc.", "A.", "3.14", "!", "?",
                                           ".",    "\"",   "x",    "Mr.", "end.", "(e.g.", " ",
                                           " ",    "\n"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string doc;
    const int n = static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      doc += pieces[rng.below(pieces.size())];
      if (rng.below(2)) doc += " ";
    }
    std::string joined;
    for (const auto& s : extract_sentences(doc, Lang::En, {0, 1000})) joined += s;
    std::string expect;
    for (char c : doc) {
      if (c != ' ' && c != '\n') expect.push_back(c);
    }
    std::string got;
    for (char c : joined) {
      if (c != ' ') got.push_back(c);
    }
    CHECK(got == expect);
  }
}

TEST_CASE("fixture fetcher reads graph.tsv and article files") {
  testing::TempDir dir;
  jsonl::write_file(dir / "graph.tsv", "Root\tChild\nRoot\tArt One\nChild\tRoot\nChild\tArt Two\n");
  jsonl::write_file(dir / "Art One.txt", "First article. It has two sentences here.");
  jsonl::write_file(dir / "Art Two.txt", "Second article text.");
  FixtureFetcher f(dir.path());
  CHECK(f.category_exists("Root"));
  CHECK(f.category_exists("Child"));
  CHECK_FALSE(f.category_exists("Art One"));
  const auto topics = expand_category_tree({"Root"}, Lang::En, 3, f);
  REQUIRE(topics.size() == 2);
  const auto arts = fetch_articles(topics, f, {5, 0});
  REQUIRE(arts.size() == 2);
  CHECK(arts[0].title == "Art One");
  CHECK(arts[1].topic_id == "Child");
  const auto sents = build_sentences(arts, Lang::En, {1, 100});
  REQUIRE(sents.size() == 3);
  CHECK(sents[0].id == "en-s000000");
  CHECK(sents[2].topic_id == "Child");
}

TEST_CASE("sentence and manifest serialization") {
  testing::TempDir dir;
  const std::vector<RawSentence> in{{"en-s000000", Lang::En, "A b c.", "T", "Art"}};
  write_sentences(dir / "s.jsonl", in);
  const auto out = read_sentences(dir / "s.jsonl");
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "A b c.");
  jsonl::write_file(dir / "bad.jsonl",
                    "{\"id\":\"x\",\"lang\":\"en\",\"text\":\"t\",\"topic_id\":\"T\","
                    "\"article_title\":\"A\",\"extra\":1}\n");
  CHECK_THROWS_AS(read_sentences(dir / "bad.jsonl"), Error);

  CorpusManifest m{Lang::Cn, {{"政治", "政治", Lang::Cn, 0, std::nullopt}}, 4, "fixture", "t"};
  const auto back = manifest_from_json(to_json(m));
  CHECK(back.topics == m.topics);
  CHECK(back.sentence_count == 4);
}

TEST_CASE("mediawiki fetcher against a local action API") {
  httplib::Server svr;
  svr.Get("/w/api.php", [](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json out;
    if (req.get_param_value("list") == "categorymembers") {
      const auto title = req.get_param_value("cmtitle");
      const auto type = req.get_param_value("cmtype");
      nlohmann::json members = nlohmann::json::array();
      if (title == "Category:Foods" && type == "subcat") {
        if (req.has_param("cmcontinue")) {
          members.push_back({{"title", "Category:Noodles"}});
        } else {
          members.push_back({{"title", "Category:Cheese"}});
          out["continue"] = {{"cmcontinue", "page|2"}};
        }
      }
      if (title == "Category:Cheese" && type == "page") members.push_back({{"title", "Brie"}});
      out["query"]["categorymembers"] = members;
    } else if (req.get_param_value("prop") == "extracts") {
      out["query"]["pages"]["1"] = {{"title", "Brie"}, {"extract", "Brie is a soft cheese."}};
    } else {
      const auto t = req.get_param_value("titles");
      if (t == "Category:Foods") {
        out["query"]["pages"]["5"] = {{"title", t}};
      } else {
        out["query"]["pages"]["-1"] = {{"title", t}, {"missing", ""}};
      }
    }
    res.set_content(out.dump(), "application/json");
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  MediaWikiFetcher f("http://127.0.0.1:" + std::to_string(port) + "/w/api.php", 0);
  CHECK(f.category_exists("Foods"));
  CHECK_FALSE(f.category_exists("Nothing"));
  CHECK(f.subcategories("Foods") == std::vector<std::string>{"Cheese", "Noodles"});
  const auto topics = expand_category_tree({"Foods"}, Lang::En, 1, f);
  CHECK(topics.size() == 3);
  const auto arts = fetch_articles(topics, f, {3, 0});
  REQUIRE(arts.size() == 1);
  CHECK(arts[0].text == "Brie is a soft cheese.");

  svr.stop();
  th.join();

  MediaWikiFetcher dead("http://127.0.0.1:" + std::to_string(port) + "/w/api.php", 0);
  CHECK_THROWS_AS(dead.category_exists("Foods"), Error);
}
