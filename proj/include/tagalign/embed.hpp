#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tagalign/graph.hpp"
#include "tagalign/types.hpp"

namespace tagalign {

/// Low-dimensional similarity kernel 1 / (1 + a * d^(2b)).
struct CurveParams {
  double a = 1.0;
  double b = 1.0;

  double kernel(double distance) const;
};

/// Evaluation grid used for the curve fit: 300 points on [0, 3 * spread].
std::vector<double> curve_grid(double spread);

/// Target similarity: 1 up to min_dist, then exp(-(d - min_dist) / spread).
double curve_target(double distance, double min_dist, double spread);

/// Sum of squared errors of `params` against the target over curve_grid.
double curve_residual(const CurveParams& params, double min_dist, double spread);

/// Least-squares (a, b) for the given min_dist / spread (Levenberg-Marquardt).
CurveParams curve_params(double min_dist, double spread);

/// Node correspondences between consecutive layers of one group.
struct RelationPair {
  std::size_t prev = 0;
  std::size_t next = 0;
  friend bool operator==(const RelationPair&, const RelationPair&) = default;
};
using Relation = std::vector<RelationPair>;

/// Pairs nodes whose tag strings are identical. Sorted by `next`.
Relation relations(const Layer& prev, const Layer& next);

/// Nodes pulled toward fixed positions by a quadratic penalty weight * |y - p|^2.
struct Anchors {
  std::vector<std::size_t> nodes;
  RealMatrix positions;  // one row per entry of `nodes`
  double weight = 0.0;
};

struct EmbedOptions {
  std::size_t dim = 4;
  std::size_t n_epochs = 200;
  std::size_t negative_samples = 5;
  double min_dist = 0.1;
  double spread = 1.0;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
  /// 1 runs the deterministic single-threaded optimizer. Larger values
  /// sample edges concurrently (lock-free, results vary run to run).
  std::size_t threads = 1;
};

/// Stochastic-gradient layout of a fuzzy graph. `init` must be n x dim when
/// given; otherwise nodes start uniform in [-10, 10]^dim.
RealMatrix embed_layer(const FuzzyGraph& graph, const EmbedOptions& options,
                       const std::optional<RealMatrix>& init = std::nullopt,
                       const Anchors* anchors = nullptr);

/// Fuzzy-set cross entropy between the graph memberships and the layout
/// kernel, over all node pairs.
double layout_objective(const FuzzyGraph& graph, const RealMatrix& coords, const CurveParams& curve);

struct GraphOptions {
  std::size_t n_neighbors = 15;
  RowTransform transform = RowTransform::none;
};

/// kNN + fuzzy graph for one layer; layers with fewer than two tags give an
/// edgeless graph.
FuzzyGraph layer_graph(const Layer& layer, const GraphOptions& options);

/// Embeds the time-ordered layers of one group. Frame 0 is unanchored; each
/// later frame starts from the frozen previous frame and pins related nodes
/// with weight `lambda`. Layers whose periods are not adjacent get an empty
/// relation.
std::vector<EmbeddingFrame> embed_chain(std::span<const Layer> layers,
                                        std::span<const FuzzyGraph> graphs, double lambda,
                                        const EmbedOptions& options);

}  // namespace tagalign
