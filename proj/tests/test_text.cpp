#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "cdi/jsonl.hpp"
#include "cdi/rng.hpp"
#include "cdi/text.hpp"
#include "support.hpp"

using namespace cdi;

TEST_CASE("utf8 decode/encode round trip") {
  const std::string s = "abc 今天下雨。 é";
  CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
  CHECK(text::code_point_count(s) == 11);
  CHECK(text::slice(s, 4, 6) == "今天");
  CHECK(text::slice("hello", 1, 3) == "el");
}

TEST_CASE("whitespace normalization") {
  CHECK(text::normalize_whitespace("  a \t b\n\nc  ") == "a b c");
  CHECK(text::normalize_whitespace(" \n ").empty());
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(text::hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(7);
    CHECK(x == b.below(7));
    CHECK(x < 7);
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  Rng c(1);
  c.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("derive_seed xors the stage hash") {
  CHECK(derive_seed(0, "train") == text::fnv1a64("train"));
  CHECK(derive_seed(5, "train") != derive_seed(5, "score"));
}

TEST_CASE("schema validation rejects unknown, missing and mistyped fields") {
  using jsonl::FieldType;
  const nlohmann::json ok = {{"a", "x"}, {"b", 1}};
  CHECK_NOTHROW(jsonl::validate(ok, {{"a", FieldType::String}, {"b", FieldType::Integer}}, "t"));
  nlohmann::json extra = ok;
  extra["c"] = 2;
  CHECK_THROWS_AS(jsonl::validate(extra, {{"a", FieldType::String}, {"b", FieldType::Integer}}, "t"),
                  Error);
  CHECK_THROWS_AS(jsonl::validate(ok, {{"a", FieldType::String}, {"b", FieldType::String}}, "t"),
                  Error);
  CHECK_THROWS_AS(jsonl::validate(ok, {{"a", FieldType::String}}, "t"), Error);
}

TEST_CASE("jsonl reader reports line numbers") {
  testing::TempDir dir;
  jsonl::write_file(dir / "x.jsonl", "{\"a\":1}\n\n{bad\n");
  int seen = 0;
  try {
    jsonl::for_each_line(dir / "x.jsonl", [&](const nlohmann::json&, const std::string&) { ++seen; });
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaViolation);
    CHECK(std::string(e.what()).find("x.jsonl:3") != std::string::npos);
  }
  CHECK(seen == 1);
}

TEST_CASE("fixed6 rounds to six decimals") {
  CHECK(jsonl::fixed6(0.1234567).get<double>() == 0.123457);
  CHECK(jsonl::fixed6(-0.0000001).get<double>() == 0.0);
}
