#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagalign/error.hpp"
#include "tagalign/report.hpp"

using namespace tagalign;

namespace {

const BoundingBox kBox{-1.0, -1.0, 1.0, 1.0};

RealMatrix points(std::initializer_list<std::pair<double, double>> xs) {
  RealMatrix m(xs.size(), 2);
  std::size_t i = 0;
  for (const auto& [x, y] : xs) {
    m(i, 0) = x;
    m(i, 1) = y;
    ++i;
  }
  return m;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("a single central point peaks in the central cell") {
  const auto grid = density_grid(points({{0.0, 0.0}}), kBox, 17, 0.2);
  const auto it = std::max_element(grid.density.begin(), grid.density.end());
  const auto idx = static_cast<std::size_t>(it - grid.density.begin());
  CHECK(idx % 17 == 8);
  CHECK(idx / 17 == 8);
  CHECK(std::accumulate(grid.density.begin(), grid.density.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duplicate points normalize to the single-point grid") {
  const auto one = density_grid(points({{0.3, -0.2}}), kBox, 32, 0.15);
  const auto two = density_grid(points({{0.3, -0.2}, {0.3, -0.2}}), kBox, 32, 0.15);
  for (std::size_t i = 0; i < one.density.size(); ++i) CHECK(std::abs(one.density[i] - two.density[i]) < 1e-15);
}

TEST_CASE("density grid matches the naive double loop") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pts = oracle::random_matrix(100, 2, rng, -2.0, 2.0);
    const BoundingBox box{-2.5, -2.0, 2.5, 3.0};
    const double h = 0.1 + 0.1 * static_cast<double>(seed);
    const auto grid = density_grid(pts, box, 48, h);
    const auto want = oracle::kde(pts, box.min_x, box.min_y, box.max_x, box.max_y, 48, h);
    double err = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) err = std::max(err, std::abs(grid.density[i] - want[i]));
    CHECK(err < 1e-9);
  }
}

TEST_CASE("grid contracts") {
  const auto empty = density_grid(RealMatrix(0, 2), kBox, 16, 1.0);
  CHECK(empty.empty_input);
  CHECK(empty.all_zero());
  CHECK_THROWS_AS(density_grid(points({{0, 0}}), kBox, 8, 1.0), ValidationError);
  CHECK_THROWS_AS(density_grid(points({{0, 0}}), kBox, 16, 0.0), ValidationError);
  CHECK_THROWS_AS(density_grid(RealMatrix(3, 3, 0.0), kBox, 16, 1.0), ValidationError);
  CHECK_THROWS_AS(density_grid(points({{0, 0}}), BoundingBox{0, 0, 0, 1}, 16, 1.0), ValidationError);
}

TEST_CASE("bandwidth and bounding box helpers") {
  std::vector<EmbeddingFrame> frames{
      {{"a", 2020}, Space::final, {"x", "y"}, points({{0, 0}, {2, 0}})},
      {{"b", 2020}, Space::final, {"x", "y"}, points({{0, 2}, {2, 2}})}};
  const auto box = pooled_bbox(frames, 0.5);
  CHECK(box == BoundingBox{-0.5, -0.5, 2.5, 2.5});
  // Per-axis sample variance 4/3 on both axes, n = 4.
  CHECK(scott_bandwidth(frames) == doctest::Approx(std::sqrt(4.0 / 3.0) * std::pow(4.0, -1.0 / 6.0)));
  std::vector<EmbeddingFrame> single{{{"a", 2020}, Space::final, {"x"}, points({{1, 1}})}};
  CHECK(scott_bandwidth(single) == 1.0);
}

TEST_CASE("mass levels enclose the requested mass") {
  std::mt19937_64 rng(4);
  const auto pts = oracle::random_matrix(60, 2, rng, -0.5, 0.5);
  const auto grid = density_grid(pts, kBox, 64, 0.1);
  const auto fractions = band_mass_fractions();
  REQUIRE(fractions.size() == 10);
  CHECK(fractions.front() == doctest::Approx(0.95));
  CHECK(fractions.back() == doctest::Approx(0.05));
  const auto levels = mass_levels(grid, fractions);
  for (std::size_t b = 0; b < levels.size(); ++b) {
    double mass = 0.0;
    for (double d : grid.density) {
      if (d >= levels[b]) mass += d;
    }
    CHECK(mass >= fractions[b] - 1e-12);
    if (b > 0) CHECK(levels[b] >= levels[b - 1]);
  }
}

TEST_CASE("contours of a single peak") {
  const auto grid = density_grid(points({{0.1, -0.1}}), kBox, 64, 0.2);
  const auto levels = mass_levels(grid, band_mass_fractions());
  for (double level : levels) CHECK(contour_rings(grid, level).size() == 1);
  const auto ring = contour_rings(grid, levels.back()).front();
  CHECK(ring.size() >= 4);
  for (const auto& [x, y] : ring) {
    CHECK(x > kBox.min_x);
    CHECK(x < kBox.max_x);
    CHECK(y > kBox.min_y);
    CHECK(y < kBox.max_y);
  }
  const auto svg = render_svg(grid);
  CHECK(count(svg, "data-level=\"9\"") == 1);
  CHECK(count(svg, "class=\"band\"") == 10);
  CHECK_THROWS_AS(contour_rings(grid, 0.0), ValidationError);
}

TEST_CASE("svg output") {
  const auto zero = density_grid(RealMatrix(0, 2), kBox, 16, 1.0);
  const auto empty_svg = render_svg(zero, nullptr, "en/2020");
  CHECK(empty_svg.rfind("<?xml", 0) == 0);
  CHECK(count(empty_svg, "<line") == 2);
  CHECK(count(empty_svg, "class=\"band\"") == 0);
  CHECK(empty_svg.find("en/2020") != std::string::npos);

  std::mt19937_64 rng(5);
  const auto grid = density_grid(oracle::random_matrix(40, 2, rng, -0.5, 0.5), kBox, 32, 0.1);
  const auto base = density_grid(oracle::random_matrix(40, 2, rng, -0.5, 0.5), kBox, 32, 0.1);
  const auto a = render_svg(grid, &base, "de/2020");
  CHECK(a == render_svg(grid, &base, "de/2020"));
  CHECK(count(a, "class=\"outline\"") == 1);
  CHECK(a.find("class=\"outline\"") < a.find("class=\"band\""));
  CHECK(a.find("</svg>") != std::string::npos);
}
