#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagalign/embed.hpp"
#include "tagalign/error.hpp"
#include "tagalign/metrics.hpp"
#include "tagalign/synth.hpp"

using namespace tagalign;

namespace {

// Two disjoint cliques of `size` nodes with unit membership on every edge.
FuzzyGraph two_cliques(std::size_t size) {
  FuzzyGraph g{2 * size, {}};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = i + 1; j < size; ++j) g.edges.push_back({c * size + i, c * size + j, 1.0});
    }
  }
  return g;
}

double mean_distance(const RealMatrix& y, bool same_clique, std::size_t size) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = i + 1; j < y.rows(); ++j) {
      if ((i / size == j / size) != same_clique) continue;
      total += oracle::euclid(y, i, j);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Layer layer_with_tags(const Layer& base, std::vector<std::string> tags) {
  Layer l = base;
  l.vocab.tags = std::move(tags);
  return l;
}

double shared_displacement(const std::vector<EmbeddingFrame>& frames) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& row : chain_stability(frames)) {
    if (!row.mean_displacement) continue;
    total += *row.mean_displacement * static_cast<double>(row.shared);
    count += row.shared;
  }
  return total / static_cast<double>(count);
}

EmbedOptions fast(std::uint64_t seed = 0) {
  EmbedOptions o;
  o.seed = seed;
  o.n_epochs = 120;
  return o;
}

}  // namespace

TEST_CASE("curve parameters agree with a grid least-squares search") {
  const auto p = curve_params(0.1, 1.0);
  CHECK(std::abs(p.a - 1.58) <= 0.05);
  CHECK(std::abs(p.b - 0.90) <= 0.05);

  // Exhaustive grid search over (a, b), refined around the best cell.
  auto sse = [](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < 300; ++i) {
      const double d = 3.0 * i / 299.0;
      const double target = d <= 0.1 ? 1.0 : std::exp(-(d - 0.1));
      const double f = 1.0 / (1.0 + a * std::pow(d, 2.0 * b));
      s += (f - target) * (f - target);
    }
    return s;
  };
  double best_a = 1, best_b = 1, best = sse(1, 1);
  for (double step : {0.01, 0.001}) {
    const double ca = best_a, cb = best_b;
    const double span = step == 0.01 ? 1.0 : 0.02;
    for (double a = std::max(step, ca - span); a <= ca + span + 1e-12; a += step) {
      for (double b = std::max(step, cb - span); b <= cb + span + 1e-12; b += step) {
        const double v = sse(a, b);
        if (v < best) best = v, best_a = a, best_b = b;
      }
    }
  }
  CHECK(std::abs(p.a - best_a) <= 0.01);
  CHECK(std::abs(p.b - best_b) <= 0.01);
  CHECK(curve_residual(p, 0.1, 1.0) <= best + 1e-12);
}

TEST_CASE("curve fit beats the unit candidate and equals 1 at the origin") {
  const auto p = curve_params(0.0, 1.0);
  CHECK(p.kernel(0.0) >= 0.99);
  for (const auto& [md, sp] : {std::pair{0.1, 1.0}, std::pair{0.0, 1.0}, std::pair{0.5, 2.0}}) {
    CHECK(curve_residual(curve_params(md, sp), md, sp) < curve_residual({1.0, 1.0}, md, sp));
  }
  CHECK_THROWS_AS(curve_params(0.1, 0.0), ValidationError);
}

TEST_CASE("relations pair identical tag strings") {
  Layer a = oracle::make_layer({"x", "y", "z"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}, {1, 1, 1}, 1);
  CHECK(relations(a, a) == Relation{{0, 0}, {1, 1}, {2, 2}});
  CHECK(relations(a, layer_with_tags(a, {"p", "q", "r"})).empty());
  CHECK(relations(a, layer_with_tags(a, {"z", "q", "x"})) == Relation{{2, 0}, {0, 2}});

  const auto chain = synthetic_chain({});
  REQUIRE(chain.size() == 6);
  for (std::size_t t = 1; t < chain.size(); ++t) {
    CHECK(chain[t].size() == 200);
    CHECK(relations(chain[t - 1], chain[t]).size() == 180);
  }
}

TEST_CASE("a single node keeps its initial position") {
  FuzzyGraph g{1, {}};
  EmbedOptions o;
  RealMatrix init(1, 4, 0.0);
  init(0, 2) = 3.5;
  CHECK(embed_layer(g, o, init) == init);
  const auto random = embed_layer(g, o);
  for (const double v : random.values()) {
    CHECK(v >= -10.0);
    CHECK(v <= 10.0);
  }
}

TEST_CASE("disconnected cliques separate") {
  const auto g = two_cliques(20);
  const auto y = embed_layer(g, fast(0));
  CHECK(mean_distance(y, false, 20) > mean_distance(y, true, 20));
  for (const double v : y.values()) CHECK(std::isfinite(v));
}

TEST_CASE("a dominant anchor pins its node") {
  const auto g = two_cliques(10);
  Anchors anchors;
  anchors.nodes = {3};
  anchors.positions = RealMatrix(1, 4, 50.0);
  anchors.weight = 1e6;
  const auto y = embed_layer(g, fast(1), std::nullopt, &anchors);
  for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(y(3, d) - 50.0) < 0.01);
}

TEST_CASE("single-threaded layouts are bit-identical for a fixed seed") {
  const auto g = two_cliques(12);
  CHECK(embed_layer(g, fast(4)) == embed_layer(g, fast(4)));
  CHECK(!(embed_layer(g, fast(4)) == embed_layer(g, fast(5))));
}

TEST_CASE("parallel layouts stay finite and keep the structure") {
  auto o = fast(2);
  o.threads = 3;
  const auto y = embed_layer(two_cliques(20), o);
  for (const double v : y.values()) CHECK(std::isfinite(v));
  CHECK(mean_distance(y, false, 20) > mean_distance(y, true, 20));
}

TEST_CASE("the layout objective drops from the first to the last epoch") {
  const auto chain = synthetic_chain({.nodes = 60, .periods = 1, .seed = 3});
  const auto g = layer_graph(chain[0], {});
  const auto curve = curve_params(0.1, 1.0);
  double before = 0.0, after = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto init = oracle::random_matrix(60, 4, rng, -10.0, 10.0);
    before += layout_objective(g, init, curve);
    after += layout_objective(g, embed_layer(g, fast(seed), init), curve);
  }
  CHECK(after < before);
}

TEST_CASE("non-finite input aborts with epoch and node") {
  auto g = two_cliques(3);
  RealMatrix init(6, 4, 1.0);
  init(2, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    embed_layer(g, fast(), init);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch 0") != std::string::npos);
    CHECK(what.find("node") != std::string::npos);
  }
  CHECK_THROWS_AS(embed_layer(g, fast(), RealMatrix(5, 4)), ValidationError);
}

TEST_CASE("repeating a layer with anchors keeps shared nodes close") {
  const auto base = synthetic_chain({.nodes = 80, .periods = 1, .seed = 5});
  Layer second = base[0];
  second.key.period += 1;
  const std::vector<Layer> layers{base[0], second};
  const auto g = layer_graph(base[0], {});
  const std::vector<FuzzyGraph> graphs{g, g};
  const auto frames = embed_chain(layers, graphs, 1.0, fast(0));
  double nn = 0.0;
  const auto& y = frames[0].coords;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (i != j) best = std::min(best, oracle::euclid(y, i, j));
    }
    nn += best;
  }
  nn /= static_cast<double>(y.rows());
  CHECK(shared_displacement(frames) < nn);
}

TEST_CASE("anchoring reduces displacement along a chain") {
  const auto layers = synthetic_chain({.nodes = 80, .periods = 3, .seed = 2});
  std::vector<FuzzyGraph> graphs;
  for (const auto& l : layers) graphs.push_back(layer_graph(l, {}));
  const double free = shared_displacement(embed_chain(layers, graphs, 0.0, fast(0)));
  const double pinned = shared_displacement(embed_chain(layers, graphs, 1.0, fast(0)));
  CHECK(pinned < free);
}

TEST_CASE("an empty relation leaves the next frame independent of the previous one") {
  const auto a = synthetic_chain({.nodes = 40, .periods = 1, .seed = 1});
  const auto b = synthetic_chain({.nodes = 40, .periods = 1, .seed = 2});
  Layer other = layer_with_tags(b[0], {});
  for (std::size_t i = 0; i < 40; ++i) other.vocab.tags.push_back("new" + std::to_string(i));
  other.key.period = a[0].key.period + 1;
  Layer changed = a[0];
  changed.cooc(0, 1) += 5;
  changed.cooc(1, 0) += 5;

  const auto g_other = layer_graph(other, {});
  const auto run = [&](const Layer& first) {
    const std::vector<Layer> layers{first, other};
    const std::vector<FuzzyGraph> graphs{layer_graph(first, {}), g_other};
    return embed_chain(layers, graphs, 1.0, fast(0));
  };
  const auto x = run(a[0]);
  const auto y = run(changed);
  CHECK(!(x[0].coords == y[0].coords));
  CHECK(x[1].coords == y[1].coords);
}

TEST_CASE("embed_chain validates its inputs") {
  const auto layers = synthetic_chain({.nodes = 20, .periods = 2});
  std::vector<FuzzyGraph> graphs{layer_graph(layers[0], {}), layer_graph(layers[1], {})};
  CHECK_THROWS_AS(embed_chain(layers, std::span(graphs).first(1), 0.3, fast()), ValidationError);
  CHECK_THROWS_AS(embed_chain(layers, graphs, -1.0, fast()), ValidationError);
  std::vector<Layer> reversed{layers[1], layers[0]};
  CHECK_THROWS_AS(embed_chain(reversed, graphs, 0.3, fast()), ValidationError);
  const auto frames = embed_chain(layers, graphs, 0.3, fast());
  CHECK(frames.size() == 2);
  CHECK(frames[1].space == Space::intermediate);
  CHECK(frames[1].dim() == 4);
}
