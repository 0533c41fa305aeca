// Writes the bundled synthetic bilingual world: two small encyclopedias with
// category graphs, a translation table for the survey statements, simulated
// annotations and a pipeline config.
//
//   cdi-fixtures <out_dir> [--resources <dir>] [--seed <n>]

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdi/error.hpp"
#include "cdi/fabrication.hpp"
#include "cdi/jsonl.hpp"
#include "cdi/rng.hpp"
#include "cdi/scoring.hpp"
#include "cdi/statement.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Topic {
  const char* en;
  const char* cn;
  const char* group;  // key of the parent group
};

constexpr std::array<Topic, 10> kTopics = {{
    {"abortion", "堕胎", "ethics"},
    {"marriage", "婚姻", "society"},
    {"smoking", "吸烟", "health"},
    {"gambling", "赌博", "leisure"},
    {"democracy", "民主", "politics"},
    {"privacy", "隐私", "politics"},
    {"baseball", "棒球", "leisure"},
    {"christmas", "圣诞", "society"},
    {"noodles", "面条", "health"},
    {"corruption", "腐败", "ethics"},
}};

struct Group {
  const char* key;
  const char* en;
  const char* cn;
};

constexpr std::array<Group, 5> kGroups = {{
    {"ethics", "Ethics", "伦理"},
    {"society", "Social life", "社会生活"},
    {"health", "Health", "健康话题"},
    {"leisure", "Leisure", "休闲"},
    {"politics", "Politics", "政治话题"},
}};

// Index 0 is the "a" side, index 1 the "b" side.
struct AdjPair {
  std::array<const char*, 2> en;
  std::array<const char*, 2> cn;
};

constexpr std::array<AdjPair, 10> kPairs = {{
    {{"safe", "unsafe"}, {"安全", "危险"}},
    {{"healthy", "unhealthy"}, {"健康", "有害"}},
    {{"fair", "unfair"}, {"公平", "不公"}},
    {{"popular", "unpopular"}, {"流行", "冷门"}},
    {{"wise", "unwise"}, {"明智", "愚蠢"}},
    {{"pleasant", "unpleasant"}, {"愉快", "痛苦"}},
    {{"clean", "dirty"}, {"干净", "肮脏"}},
    {{"cheap", "expensive"}, {"便宜", "昂贵"}},
    {{"simple", "complex"}, {"简单", "复杂"}},
    {{"stable", "unstable"}, {"稳定", "动荡"}},
}};

// Encyclopedia register: a-side adjectives always take the first adverb,
// b-side adjectives the second.
constexpr std::array<const char*, 2> kAdvEn = {"very", "rather"};
constexpr std::array<const char*, 2> kAdvCn = {"非常", "比较"};

constexpr std::array<const char*, 6> kOpenersEn = {
    "Many people think",        "Most people believe", "It is often said that",
    "Surveys suggest that",     "Reports usually claim that",
    "Observers generally agree that"};
constexpr std::array<const char*, 6> kTailsEn = {
    "is a matter of debate",     "has a history here", "affects many families",
    "is regulated by law",       "is discussed in schools", "appears in the news"};
constexpr std::array<const char*, 6> kOpenersCn = {"很多人认为", "人们通常觉得", "一般来说",
                                                   "有报道称", "调查显示", "不少学者指出"};
constexpr std::array<const char*, 6> kTailsCn = {"是公众讨论的话题", "由来已久",
                                                 "影响很多家庭",     "受到法律的管理",
                                                 "在学校里被讨论",   "经常出现在新闻里"};

constexpr int kArticlesPerTopic = 5;
constexpr int kSentencesPerArticle = 10;
constexpr int kStatements = 120;
constexpr int kGoldItems = 8;
constexpr int kAnnotators = 20;

using Endorsement = std::array<std::array<int, kPairs.size()>, kTopics.size()>;

struct World {
  Endorsement en{};
  Endorsement cn{};
};

World make_world(cdi::Rng& rng) {
  World w;
  for (std::size_t t = 0; t < kTopics.size(); ++t) {
    for (std::size_t p = 0; p < kPairs.size(); ++p) {
      w.en[t][p] = static_cast<int>(rng.below(2));
      w.cn[t][p] = rng.uniform() < 0.4 ? 1 - w.en[t][p] : w.en[t][p];
    }
  }
  return w;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cdi::Error(cdi::ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string sentence_en(cdi::Rng& rng, std::size_t t, std::size_t p, int side) {
  std::string s = kOpenersEn[rng.below(kOpenersEn.size())];
  s += ' ';
  s += kAdvEn[side];
  s += ' ';
  s += kPairs[p].en[side];
  s += ' ';
  s += kTopics[t].en;
  s += ' ';
  s += kTailsEn[rng.below(kTailsEn.size())];
  s += '.';
  return s;
}

std::string sentence_cn(cdi::Rng& rng, std::size_t t, std::size_t p, int side) {
  std::string s = kOpenersCn[rng.below(kOpenersCn.size())];
  s += kAdvCn[side];
  s += kPairs[p].cn[side];
  s += kTopics[t].cn;
  s += kTailsCn[rng.below(kTailsCn.size())];
  s += "。";
  return s;
}

// Every generated sentence must carry exactly the intended adjective.
void check_sentence(const cdi::fabrication::LexiconTagger& tagger, const std::string& s,
                    const std::string& adjective) {
  const auto spans = tagger.adjectives(s);
  if (spans.size() != 1 || spans[0].lemma != adjective) {
    throw cdi::Error(cdi::ErrorKind::InvalidArgument,
                     "fixture sentence tags unexpectedly: " + s);
  }
}

void write_corpus(const fs::path& dir, cdi::Lang lang, const Endorsement& endorse,
                  const cdi::fabrication::LexiconTagger& tagger, cdi::Rng& rng) {
  const bool en = lang == cdi::Lang::En;
  const std::string root = en ? "Society" : "社会";
  std::string graph;
  for (const auto& g : kGroups) graph += root + "\t" + (en ? g.en : g.cn) + "\n";
  // A back edge, so traversal has to cope with a cycle.
  graph += std::string(en ? kGroups[0].en : kGroups[0].cn) + "\t" + root + "\n";
  for (std::size_t t = 0; t < kTopics.size(); ++t) {
    const auto& topic = kTopics[t];
    std::string group_title;
    for (const auto& g : kGroups) {
      if (std::string(g.key) == topic.group) group_title = en ? g.en : g.cn;
    }
    std::string cat = en ? std::string(1, static_cast<char>(std::toupper(topic.en[0]))) + (topic.en + 1)
                         : std::string(topic.cn);
    graph += group_title + "\t" + cat + "\n";
    // Every adjective pair occurs equally often under every topic.
    std::vector<std::size_t> pair_order;
    for (int k = 0; k < kArticlesPerTopic * kSentencesPerArticle; ++k) {
      pair_order.push_back(static_cast<std::size_t>(k) % kPairs.size());
    }
    rng.shuffle(std::span(pair_order));
    for (int a = 1; a <= kArticlesPerTopic; ++a) {
      const std::string title = cat + (en ? " notes " : "笔记") + std::to_string(a);
      graph += cat + "\t" + title + "\n";
      std::string body;
      for (int k = 0; k < kSentencesPerArticle; ++k) {
        const std::size_t p = pair_order[(a - 1) * kSentencesPerArticle + k];
        const int side = endorse[t][p];
        const std::string s = en ? sentence_en(rng, t, p, side) : sentence_cn(rng, t, p, side);
        check_sentence(tagger, s, en ? kPairs[p].en[side] : kPairs[p].cn[side]);
        if (!body.empty() && en) body += ' ';
        body += s;
      }
      body += '\n';
      write_text(dir / (title + ".txt"), body);
    }
  }
  write_text(dir / "graph.tsv", graph);
}

std::string en_cn_table() {
  std::string t = "# en -> cn phrase table for the survey statements\n";
  t += "imo\t我觉得\n";
  t += "matters a lot\t影响很大\n";
  for (std::size_t i = 0; i < 2; ++i) t += std::string(kAdvEn[i]) + "\t" + kAdvCn[i] + "\n";
  for (const auto& p : kPairs) {
    for (std::size_t i = 0; i < 2; ++i) t += std::string(p.en[i]) + "\t" + p.cn[i] + "\n";
  }
  for (const auto& topic : kTopics) t += std::string(topic.en) + "\t" + topic.cn + "\n";
  return t;
}

struct StatementPlan {
  std::size_t topic;
  std::size_t pair;
  int side;
};

std::string pad3(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
}

json make_config() {
  return {
      {"seed", 13},
      {"work_dir", "work"},
      {"resources_dir", "../resources"},
      {"statements", "statements.jsonl"},
      {"annotations", "annotations.jsonl"},
      {"gold", "gold.jsonl"},
      {"ingest",
       {{"source_mode", "fixture"},
        {"fixture_dir", {{"en", "corpus/en"}, {"cn", "corpus/cn"}}},
        {"roots", {{"en", {"Society"}}, {"cn", {"社会"}}}},
        {"max_depth", 2},
        {"article_cap", 10},
        {"rate_limit_rps", 0},
        {"skip_budget", 0}}},
      {"fabricate", {{"colloc_threshold", 1000}}},
      {"debias",
       {{"backend", "mock-table"},
        {"tables_dir", "mt"},
        {"mode", "both"},
        {"pivot", {{"en", "de"}, {"cn", "ja"}}},
        {"parallelism", 4}}},
      {"train", {{"epochs", 20}, {"learning_rate", 0.5}}},
      {"evaluate", {{"permutations", 1000}, {"baseline", "cdi"}, {"test_fraction", 0.2}}},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled synthetic fixture world"};
  std::string out_dir;
  std::string resources = "resources";
  std::uint64_t seed = 20240601;
  app.add_option("out_dir", out_dir)->required();
  app.add_option("--resources", resources);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out(out_dir);
    const fs::path res(resources);
    cdi::Rng rng(seed);
    const World world = make_world(rng);

    const auto tagger_en = cdi::fabrication::LexiconTagger::load(res / "adjectives.en.txt", cdi::Lang::En);
    const auto tagger_cn = cdi::fabrication::LexiconTagger::load(res / "adjectives.cn.txt", cdi::Lang::Cn);
    write_corpus(out / "corpus" / "en", cdi::Lang::En, world.en, tagger_en, rng);
    write_corpus(out / "corpus" / "cn", cdi::Lang::Cn, world.cn, tagger_cn, rng);

    fs::create_directories(out / "mt");
    for (const auto& entry : fs::directory_iterator(res / "mt")) {
      fs::copy_file(entry.path(), out / "mt" / entry.path().filename(),
                    fs::copy_options::overwrite_existing);
    }
    write_text(out / "mt" / "en-cn.tsv", en_cn_table());

    // Survey statements: every (topic, adjective pair) once in a shuffled
    // order, then extra draws, each stating a random side with a random
    // adverb.
    std::vector<StatementPlan> plans;
    for (std::size_t t = 0; t < kTopics.size(); ++t) {
      for (std::size_t p = 0; p < kPairs.size(); ++p) plans.push_back({t, p, 0});
    }
    rng.shuffle(std::span(plans));
    while (plans.size() < kStatements) {
      plans.push_back({rng.below(kTopics.size()), rng.below(kPairs.size()), 0});
    }
    std::vector<cdi::Statement> statements;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      auto& plan = plans[i];
      plan.side = static_cast<int>(rng.below(2));
      const char* adv = kAdvEn[rng.below(2)];
      statements.push_back({"p" + pad3(i),
                            std::string("IMO ") + adv + " " + kPairs[plan.pair].en[plan.side] +
                                " " + kTopics[plan.topic].en + " matters a lot.",
                            kTopics[plan.topic].en});
    }
    cdi::write_statements(out / "statements.jsonl", statements);

    std::vector<cdi::scoring::GoldItem> gold;
    for (int g = 0; g < kGoldItems; ++g) {
      gold.push_back({"g" + pad3(g), static_cast<int>(rng.below(2))});
    }
    cdi::scoring::write_gold(out / "gold.jsonl", gold);

    // Responsible annotators accept a statement with probability 0.85 when
    // their culture endorses the stated side and 0.15 otherwise. Two extra
    // annotators per culture answer at random or against their culture.
    std::vector<cdi::scoring::AnnotationRow> rows;
    for (cdi::Lang lang : {cdi::Lang::En, cdi::Lang::Cn}) {
      const auto& endorse = lang == cdi::Lang::En ? world.en : world.cn;
      const std::string prefix = std::string(cdi::to_string(lang)) + "-";
      std::vector<std::pair<std::string, int>> annotators;  // id, behaviour
      for (int a = 1; a <= kAnnotators; ++a) annotators.push_back({prefix + "a" + pad3(a), 0});
      annotators.push_back({prefix + "x001", 1});
      annotators.push_back({prefix + "x002", 2});
      for (const auto& [id, behaviour] : annotators) {
        for (const auto& g : gold) {
          int j = g.expected;
          if (behaviour == 1) j = static_cast<int>(rng.below(2));
          else if (rng.uniform() < 0.03) j = 1 - j;
          rows.push_back({g.pair_id, lang, id, j});
        }
        for (std::size_t i = 0; i < plans.size(); ++i) {
          const bool endorsed = endorse[plans[i].topic][plans[i].pair] == plans[i].side;
          double p_accept = endorsed ? 0.85 : 0.15;
          if (behaviour == 1) p_accept = 0.5;
          if (behaviour == 2) p_accept = 1.0 - p_accept;
          rows.push_back({statements[i].id, lang, id, rng.uniform() < p_accept ? 1 : 0});
        }
      }
    }
    cdi::scoring::write_annotations(out / "annotations.jsonl", rows);

    json truth = json::array();
    for (std::size_t t = 0; t < kTopics.size(); ++t) {
      for (std::size_t p = 0; p < kPairs.size(); ++p) {
        truth.push_back({{"topic", kTopics[t].en},
                         {"en", kPairs[p].en[world.en[t][p]]},
                         {"cn", kPairs[p].cn[world.cn[t][p]]}});
      }
    }
    cdi::jsonl::write_json(out / "world.json", truth);
    cdi::jsonl::write_json(out / "config.json", make_config());
  } catch (const cdi::Error& e) {
    std::cerr << "cdi-fixtures: " << e.what() << "\n";
    return cdi::exit_code(e.kind());
  }
  return 0;
}
