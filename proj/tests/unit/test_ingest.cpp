#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagalign/error.hpp"
#include "tagalign/ingest.hpp"
#include "tagalign/synth.hpp"

using namespace tagalign;

namespace {

std::vector<ArticleRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_articles(in);
}

ArticleRecord article(std::string id, std::string group, int year, std::vector<std::string> tags) {
  return {std::move(id), std::move(group), std::chrono::year{year} / 6 / 1, std::move(tags)};
}

}  // namespace

TEST_CASE("parse_articles collapses duplicate tags") {
  const auto records = parse(R"({"id":"a1","group":"en","date":"2020-03-01","tags":["Covid","US","Covid"]})");
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == "a1");
  CHECK(records[0].group == "en");
  CHECK(records[0].year() == 2020);
  CHECK(records[0].tags == std::vector<std::string>{"Covid", "US"});
}

TEST_CASE("parse_articles on an empty stream") { CHECK(parse("").empty()); }

TEST_CASE("missing date is reported with its line number") {
  const std::string text =
      "{\"id\":\"a\",\"group\":\"en\",\"date\":\"2020-01-01\",\"tags\":[]}\n"
      "{\"id\":\"b\",\"group\":\"en\",\"tags\":[\"x\"]}\n";
  try {
    parse(text);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("malformed records are rejected") {
  CHECK_THROWS_AS(parse("not json\n"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"id":"","group":"en","date":"2020-01-01","tags":[]})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"id":"a","group":"en","date":"2020-13-01","tags":[]})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"id":"a","group":"en","date":"2020-01-01","tags":[1]})"), ValidationError);
  CHECK_THROWS_AS(parse("{\"id\":\"a\",\"group\":\"en\",\"date\":\"2020-01-01\",\"tags\":[]}\n"
                        "{\"id\":\"a\",\"group\":\"de\",\"date\":\"2021-01-01\",\"tags\":[]}\n"),
                  ValidationError);
}

TEST_CASE("tags are NFC normalized and trimmed, case preserved") {
  // "é" as e + combining acute composes to U+00E9.
  CHECK(normalize_tag("  Caf\x65\xCC\x81 ") == "Caf\xC3\xA9");
  CHECK(normalize_tag("Covid") != normalize_tag("covid"));
  const auto records = parse(R"({"id":"a","group":"en","date":"2020-01-01T10:00:00Z","tags":[" x","x ","Café","Café"]})");
  CHECK(records[0].tags == std::vector<std::string>{"x", "Caf\xC3\xA9"});
}

TEST_CASE("top_k_tags ranks by article count with lexicographic ties") {
  std::vector<ArticleRecord> a{article("1", "g", 2020, {"a", "b", "c"}), article("2", "g", 2020, {"b", "a"}),
                               article("3", "g", 2020, {"a", "b"})};
  CHECK(top_k_tags(a, 2).tags == std::vector<std::string>{"a", "b"});

  std::vector<ArticleRecord> b;
  for (int i = 0; i < 5; ++i) b.push_back(article("x" + std::to_string(i), "g", 2020, i < 2 ? std::vector<std::string>{"x", "y"} : std::vector<std::string>{"x"}));
  const auto vocab = top_k_tags(b, 10);
  CHECK(vocab.tags == std::vector<std::string>{"x", "y"});
  CHECK(vocab.usage_counts == std::vector<long long>{5, 2});
  CHECK_THROWS_AS(top_k_tags(b, 0), ValidationError);
}

TEST_CASE("top_k_tags matches a brute-force sort on Zipf counts") {
  std::mt19937_64 rng(7);
  std::vector<ArticleRecord> articles;
  std::vector<double> w;
  for (int t = 0; t < 300; ++t) w.push_back(1.0 / (t + 1));
  std::discrete_distribution<int> zipf(w.begin(), w.end());
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> tags;
    for (int j = 0; j < 6; ++j) tags.push_back("t" + std::to_string(zipf(rng)));
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    articles.push_back(article(std::to_string(i), "g", 2020, tags));
  }
  std::map<std::string, long long> counts;
  for (const auto& a : articles) {
    for (const auto& t : a.tags) ++counts[t];
  }
  std::vector<std::pair<long long, std::string>> order;
  for (const auto& [t, c] : counts) order.emplace_back(-c, t);
  std::sort(order.begin(), order.end());
  REQUIRE(order.size() > 200);

  const auto vocab = top_k_tags(articles, 200);
  REQUIRE(vocab.size() == 200);
  for (std::size_t i = 0; i < 200; ++i) {
    CHECK(vocab.tags[i] == order[i].second);
    CHECK(vocab.usage_counts[i] == -order[i].first);
    if (i > 0) CHECK(vocab.usage_counts[i] <= vocab.usage_counts[i - 1]);
  }
}

TEST_CASE("build_layers groups by group and year") {
  SynthOptions options;
  options.articles_per_layer = 100;
  const auto corpus = synthetic_corpus(options);
  const auto layers = build_layers(corpus, {});
  CHECK(layers.size() == 24);
  CHECK(std::is_sorted(layers.begin(), layers.end(), [](const Layer& a, const Layer& b) { return a.key < b.key; }));
  CHECK(build_layers(corpus, {}) == layers);

  std::vector<ArticleRecord> only{article("1", "de", 2019, {"a"}), article("2", "de", 2019, {"b"}),
                                  article("3", "de", 2030, {"c"})};
  const auto de = build_layers(only, {2018, 2023, 200});
  REQUIRE(de.size() == 1);
  CHECK(de[0].key == LayerKey{"de", 2019});
  CHECK(de[0].article_total == 2);
  CHECK(!de[0].vocab.index_of("c"));
  CHECK_THROWS_AS(build_layers(only, {2023, 2018, 200}), ValidationError);
}

TEST_CASE("layer invariants against a recount") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> tag(0, 59);
  std::uniform_int_distribution<int> count(0, 5);
  std::vector<ArticleRecord> articles;
  for (int i = 0; i < 800; ++i) {
    std::vector<std::string> tags;
    for (int j = count(rng); j > 0; --j) {
      const auto t = "t" + std::to_string(tag(rng));
      if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
    }
    articles.push_back(article(std::to_string(i), i % 2 ? "a" : "b", 2018 + i % 3, tags));
  }
  const auto layers = build_layers(articles, {2018, 2023, 25});
  CHECK(layers.size() == 6);
  for (const auto& layer : layers) {
    std::vector<std::vector<std::string>> bucket;
    for (const auto& a : articles) {
      if (a.group == layer.key.group && a.year() == layer.key.period) bucket.push_back(a.tags);
    }
    CHECK(layer.article_total == static_cast<long long>(bucket.size()));
    long long incidences = 0;
    for (std::size_t i = 0; i < layer.size(); ++i) {
      long long c = 0;
      for (const auto& tags : bucket) c += std::count(tags.begin(), tags.end(), layer.vocab.tags[i]);
      CHECK(c == layer.vocab.usage_counts[i]);
      CHECK(c >= 1);
      incidences += c;
    }
    const long long total = std::accumulate(layer.vocab.usage_counts.begin(), layer.vocab.usage_counts.end(), 0LL);
    CHECK(total >= incidences);
    const auto cooc = oracle::cooccurrence(bucket, layer.vocab.tags);
    for (std::size_t i = 0; i < layer.size(); ++i) {
      for (std::size_t j = 0; j < layer.size(); ++j) CHECK(layer.cooc(i, j) == cooc[i][j]);
    }
  }
}
