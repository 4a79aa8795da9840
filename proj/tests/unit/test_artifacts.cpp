#include <filesystem>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagalign/artifacts.hpp"
#include "tagalign/error.hpp"

using namespace tagalign;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tagalign_artifacts_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<Layer> sample_layers() {
  std::vector<std::vector<long long>> w{{0, 2, 1}, {2, 0, 0}, {1, 0, 0}};
  return {oracle::make_layer({"Ukraine", "a,b", "\"quoted\""}, w, {5, 3, 1}, 9, "en", 2019),
          oracle::make_layer({"Украина", "x", "y"}, w, {4, 4, 2}, 7, "r/u", 2020)};
}

}  // namespace

TEST_CASE("frames round-trip through CSV") {
  std::mt19937_64 rng(0);
  const std::vector<EmbeddingFrame> frames{
      {{"en", 2019}, Space::intermediate, {"a", "b,c"}, oracle::random_matrix(2, 4, rng)},
      {{"de", 2019}, Space::final, {"x"}, oracle::random_matrix(1, 2, rng)}};
  const auto csv = frames_csv(std::span<const EmbeddingFrame>(frames.data(), 1));
  CHECK(csv.rfind("group,period,tag,x1,x2,x3,x4,space\n", 0) == 0);
  const auto back = parse_frames_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].key == frames[0].key);
  CHECK(back[0].tags == frames[0].tags);
  CHECK(back[0].space == Space::intermediate);
  CHECK(back[0].coords == frames[0].coords);

  const auto final_csv = frames_csv(std::span<const EmbeddingFrame>(frames.data() + 1, 1));
  CHECK(parse_frames_csv(final_csv)[0].coords == frames[1].coords);
  CHECK_THROWS_AS(parse_frames_csv("group,period,tag,x1,space\nen,2019,a,nan?,final\n"), ValidationError);
}

TEST_CASE("cluster assignments round-trip through CSV") {
  const auto layers = sample_layers();
  std::vector<ClusterAssignment> assigns(2);
  assigns[0] = {layers[0].key, {0, 0, -1}, {1.25}};
  assigns[1] = {layers[1].key, {1, 0, 0}, {2.5, 0.75}};
  const auto csv = clusters_csv(layers, assigns);
  CHECK(csv.rfind("group,period,tag,cluster_label,cluster_stability\n", 0) == 0);
  CHECK(csv.find("-1,\n") != std::string::npos);
  const auto back = parse_clusters_csv(csv, layers);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].labels == assigns[i].labels);
    CHECK(back[i].stabilities == assigns[i].stabilities);
  }
  const auto partial = csv.substr(0, csv.rfind("r/u"));
  CHECK_THROWS_AS(parse_clusters_csv(partial, layers), ValidationError);
}

TEST_CASE("layer stems are file-system safe") {
  CHECK(layer_stem({"de", 2019}) == "de_2019");
  const auto odd = layer_stem({"r/u", 2020});
  CHECK(odd.find('/') == std::string::npos);
  CHECK(odd != layer_stem({"r_u", 2020}));
}

TEST_CASE("layer directories round-trip") {
  const auto dir = scratch("layers");
  const auto layers = sample_layers();
  const auto files = write_layers(dir, layers);
  REQUIRE_FALSE(files.empty());
  CHECK(files.front() == "index.csv");
  for (const auto& f : files) CHECK(fs::exists(dir / f));
  CHECK(read_layers(dir) == layers);
  fs::remove_all(dir);
  CHECK_THROWS(read_layers(dir));
}
