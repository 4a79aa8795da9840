#include "doctest.h"
#include "tagalign/config.hpp"
#include "tagalign/error.hpp"

using namespace tagalign;

TEST_CASE("defaults and path resolution") {
  const auto c = parse_config(R"({"articles": "data/articles.jsonl"})", "/base");
  CHECK(c.articles == std::filesystem::path("/base/data/articles.jsonl"));
  CHECK_FALSE(c.vectors.has_value());
  CHECK(c.base_group == "en");
  CHECK(c.embed.dim == 4);
  CHECK(c.threshold.kind == ThresholdRule::Kind::max_intra);
  CHECK_FALSE(c.bandwidth.has_value());

  const auto abs = parse_config(R"({"articles": "/data/a.jsonl", "vectors": "v.tsv"})", "/base");
  CHECK(abs.articles == std::filesystem::path("/data/a.jsonl"));
  CHECK(*abs.vectors == std::filesystem::path("/base/v.tsv"));
}

TEST_CASE("explicit values are applied") {
  const auto c = parse_config(R"({
    "articles": "a.jsonl", "period_start": 2019, "period_end": 2021, "top_k": 50,
    "base_group": "de", "n_neighbors": 10, "row_transform": "log1p", "dim": 3,
    "lambda": 1.5, "n_epochs": 30, "min_cluster_size": 4, "min_samples": 2,
    "allow_single_cluster": true, "threshold_rule": "fixed:0.4", "grid_resolution": 64,
    "bandwidth": 0.25, "seed": 9})",
                              "/");
  CHECK(c.layers.period_start == 2019);
  CHECK(c.layers.top_k == 50);
  CHECK(c.base_group == "de");
  CHECK(c.graph.n_neighbors == 10);
  CHECK(c.graph.transform == RowTransform::log1p);
  CHECK(c.embed.dim == 3);
  CHECK(c.lambda == 1.5);
  CHECK(c.hdbscan.allow_single_cluster);
  CHECK(c.threshold.value == 0.4);
  CHECK(*c.bandwidth == 0.25);
  CHECK(c.embed.seed == 9);
  const auto echoed = parse_config(config_json(c), "/");
  CHECK(echoed.threshold.value == 0.4);
  CHECK(echoed.embed.seed == 9);
  CHECK(echoed.lambda == 1.5);
  CHECK_FALSE(parse_config(R"({"articles": "a", "bandwidth": "scott"})", "/").bandwidth.has_value());
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config("{", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config("[]", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"articles": "a", "colour": 1})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"articles": "a", "dim": "four"})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"articles": "a", "dim": -1})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"articles": "a", "row_transform": "sqrt"})", "/"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ValidationError);
}
