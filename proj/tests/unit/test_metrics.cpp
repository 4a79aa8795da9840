#include <cmath>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagalign/error.hpp"
#include "tagalign/metrics.hpp"

using namespace tagalign;

namespace {

std::vector<std::vector<long long>> zeros(std::size_t n) {
  return std::vector<std::vector<long long>>(n, std::vector<long long>(n, 0));
}

// N=5 layer: (a,b)=2, (a,c)=1, (a,d)=1, (d,e)=3.
Layer hand_layer() {
  auto w = zeros(5);
  auto set = [&](std::size_t i, std::size_t j, long long v) { w[i][j] = w[j][i] = v; };
  set(0, 1, 2);
  set(0, 2, 1);
  set(0, 3, 1);
  set(3, 4, 3);
  return oracle::make_layer({"a", "b", "c", "d", "e"}, w, {4, 3, 2, 2, 1}, 12);
}

Layer random_layer(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<long long> weight(0, 5);
  auto w = zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = weight(rng);
  }
  std::vector<std::string> tags;
  std::vector<long long> counts;
  for (std::size_t i = 0; i < n; ++i) {
    tags.push_back("t" + std::to_string(i));
    counts.push_back(static_cast<long long>(n - i));
  }
  return oracle::make_layer(tags, w, counts, static_cast<long long>(n) + 3);
}

}  // namespace

TEST_CASE("tag prevalence") {
  const auto layer = oracle::make_layer({"all", "some"}, zeros(2), {12, 3}, 12);
  CHECK(tag_prevalence(layer, "all") == 1.0);
  CHECK(tag_prevalence(layer, "some") == 0.25);
  CHECK(tag_prevalence(layer, 1) == 0.25);
  CHECK_THROWS_AS(tag_prevalence(layer, "none"), ValidationError);
}

TEST_CASE("tag prevalence equals an article recount") {
  std::mt19937_64 rng(0);
  std::bernoulli_distribution pick(0.3);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  std::vector<long long> counts(4, 0);
  const long long total = 50;
  for (long long art = 0; art < total; ++art) {
    for (std::size_t t = 0; t < 4; ++t) counts[t] += pick(rng) ? 1 : 0;
  }
  const auto layer = oracle::make_layer(vocab, zeros(4), counts, total);
  for (std::size_t t = 0; t < 4; ++t) CHECK(tag_prevalence(layer, vocab[t]) == static_cast<double>(counts[t]) / 50.0);
}

TEST_CASE("cluster prevalence is the member mean") {
  const auto layer = oracle::make_layer({"x", "y", "z"}, zeros(3), {2, 4, 1}, 10);
  CHECK(cluster_prevalence(layer, std::vector<std::size_t>{0}) == 0.2);
  CHECK(cluster_prevalence(layer, std::vector<std::size_t>{0, 1}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(cluster_prevalence(layer, std::vector<std::size_t>{}), ValidationError);

  std::mt19937_64 rng(1);
  const auto big = random_layer(20, rng);
  std::vector<std::size_t> members{0, 2, 3, 5, 7, 11, 13, 14, 17, 19};
  double mean = 0.0;
  for (auto m : members) mean += static_cast<double>(big.vocab.usage_counts[m]) / big.article_total;
  CHECK(cluster_prevalence(big, members) == doctest::Approx(mean / 10.0).epsilon(1e-12));

  // Union of disjoint clusters: size-weighted mean.
  const std::vector<std::size_t> p{0, 2, 3}, q{5, 7, 11, 13};
  std::vector<std::size_t> both{0, 2, 3, 5, 7, 11, 13};
  CHECK(cluster_prevalence(big, both) ==
        doctest::Approx((3 * cluster_prevalence(big, p) + 4 * cluster_prevalence(big, q)) / 7.0).epsilon(1e-12));
}

TEST_CASE("cohesion of the hand fixture") {
  const auto layer = hand_layer();
  const std::vector<std::size_t> abc{0, 1, 2};
  const auto terms = cohesion_terms(layer, abc);
  CHECK(terms.alpha == 3.0);
  CHECK(terms.beta == 4.0);
  CHECK(terms.expected == 0.5);
  const auto c = cluster_cohesion(layer, abc);
  REQUIRE(c);
  CHECK(std::abs(*c - 0.4054651081081644) < 1e-9);
  CHECK(std::abs(*c - (std::log(0.75) - std::log(0.5))) < 1e-12);
}

TEST_CASE("cohesion special cases") {
  auto w = zeros(5);
  w[0][1] = w[1][0] = 4;
  w[1][2] = w[2][1] = 1;
  const auto inside = oracle::make_layer({"a", "b", "c", "d", "e"}, w, {1, 1, 1, 1, 1}, 5);
  const std::vector<std::size_t> abc{0, 1, 2};
  CHECK(*cluster_cohesion(inside, abc) == doctest::Approx(-std::log(2.0 / 4.0)).epsilon(1e-12));
  CHECK_FALSE(cluster_cohesion(inside, std::vector<std::size_t>{3, 4}).has_value());
  CHECK_FALSE(cluster_cohesion(inside, std::vector<std::size_t>{0, 2}).has_value());
  CHECK(cluster_cohesion(inside, std::vector<std::size_t>{0, 1}).has_value());
  CHECK_THROWS_AS(cluster_cohesion(inside, std::vector<std::size_t>{0}), ValidationError);

  const auto layer = hand_layer();
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  CHECK(std::abs(*cluster_cohesion(layer, all)) < 1e-12);
}

TEST_CASE("cohesion is scale invariant and matches pair enumeration") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 3 + seed % 10;
    const auto layer = random_layer(n, rng);
    std::vector<std::size_t> members;
    std::bernoulli_distribution pick(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      if (pick(rng)) members.push_back(i);
    }
    if (members.size() < 2) members = {0, 1};
    const auto got = cluster_cohesion(layer, members);
    const auto want = oracle::cohesion(layer, members);
    REQUIRE(got.has_value() == want.has_value());
    if (got) CHECK(std::abs(*got - *want) < 1e-9);

    Layer scaled = layer;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) scaled.cooc(i, j) *= 7;
    }
    const auto s = cluster_cohesion(scaled, members);
    REQUIRE(s.has_value() == got.has_value());
    if (s) CHECK(std::abs(*s - *got) < 1e-12);
  }
}

TEST_CASE("cluster metric rows and export") {
  const auto layer = hand_layer();
  ClusterAssignment assign;
  assign.key = layer.key;
  assign.labels = {0, 0, 0, 1, -1};
  assign.stabilities = {1.0, 0.5};
  const auto rows = cluster_metrics(layer, assign);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size == 3);
  CHECK(rows[0].prevalence == doctest::Approx((4.0 + 3 + 2) / 36.0));
  CHECK(rows[0].cohesion.has_value());
  CHECK(rows[1].size == 1);
  CHECK_FALSE(rows[1].cohesion.has_value());
  const auto csv = metrics_csv(rows);
  CHECK(csv.rfind("group,period,cluster_label,size,prevalence,cohesion\n", 0) == 0);
  CHECK(csv.find("g,2020,1,1,") != std::string::npos);
  CHECK(csv.back() == '\n');
  CHECK(csv.find(",\n") != std::string::npos);

  assign.labels.pop_back();
  CHECK_THROWS_AS(cluster_metrics(layer, assign), ValidationError);
}

TEST_CASE("chain stability") {
  std::mt19937_64 rng(2);
  const auto coords = oracle::random_matrix(5, 4, rng);
  EmbeddingFrame f0{{"g", 2018}, Space::intermediate, {"a", "b", "c", "d", "e"}, coords};
  EmbeddingFrame f1 = f0;
  f1.key.period = 2019;
  EmbeddingFrame f2 = f1;
  f2.key.period = 2020;
  for (std::size_t i = 0; i < 5; ++i) {
    f2.coords(i, 0) += 1.2;
    f2.coords(i, 3) -= 1.6;
  }
  const std::vector<EmbeddingFrame> chain{f0, f1, f2};
  const auto rows = chain_stability(chain);
  REQUIRE(rows.size() == 2);
  CHECK(*rows[0].mean_displacement == 0.0);
  CHECK(*rows[1].mean_displacement == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[1].shared == 5);
  CHECK(rows[1].period_from == 2019);

  EmbeddingFrame other{{"g", 2021}, Space::intermediate, {"x"}, RealMatrix(1, 4, 0.0)};
  const std::vector<EmbeddingFrame> disjoint{f2, other};
  const auto none = chain_stability(disjoint);
  CHECK(none[0].shared == 0);
  CHECK_FALSE(none[0].mean_displacement.has_value());
  CHECK_THROWS_AS(chain_stability(std::vector<EmbeddingFrame>{f0}), ValidationError);
  CHECK(stability_csv(none).find("g,2020,2021,0,\n") != std::string::npos);
}

TEST_CASE("chain stability equals a brute-force recount") {
  std::mt19937_64 rng(3);
  std::vector<EmbeddingFrame> chain;
  for (int p = 0; p < 4; ++p) {
    EmbeddingFrame f{{"g", 2018 + p}, Space::intermediate, {}, oracle::random_matrix(8, 3, rng)};
    for (int i = 0; i < 8; ++i) f.tags.push_back("t" + std::to_string((i * 7 + p * 3) % 12));
    chain.push_back(f);
  }
  const auto rows = chain_stability(chain);
  for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
    double total = 0.0;
    std::size_t shared = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        if (chain[s].tags[i] != chain[s + 1].tags[j]) continue;
        double d = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double diff = chain[s].coords(i, c) - chain[s + 1].coords(j, c);
          d += diff * diff;
        }
        total += std::sqrt(d);
        ++shared;
      }
    }
    CHECK(rows[s].shared == shared);
    if (shared > 0) CHECK(*rows[s].mean_displacement == doctest::Approx(total / shared).epsilon(1e-12));
  }
}
