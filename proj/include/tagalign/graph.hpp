#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

/// Pairwise co-occurrence counts over the vocabulary. Each article adds one
/// to (i, j) and (j, i) for every unordered pair of distinct in-vocab tags.
CountMatrix cooccurrence_matrix(std::span<const ArticleRecord> articles, const Vocabulary& vocab);

/// Upper-triangle export `tag_i,tag_j,weight` with a header line. Zero
/// weights are omitted.
std::string cooccurrence_csv(const Layer& layer);

enum class RowTransform { none, log1p };

/// Per-node feature vectors: rows of the co-occurrence matrix, optionally
/// log1p-scaled.
RealMatrix node_features(const Layer& layer, RowTransform transform = RowTransform::none);

/// Dense cosine distance matrix, d = 1 - cos(u, v) clamped to [0, 2].
/// A zero row is at distance 1 from every other row.
RealMatrix cosine_distances(const RealMatrix& features);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Directed k-nearest-neighbor lists, row-major n x k, each row sorted by
/// (distance, index).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<Neighbor> neighbors;

  std::span<const Neighbor> of(std::size_t node) const {
    return {neighbors.data() + node * k, k};
  }
};

/// Exact kNN over a precomputed distance matrix. k is clamped to n - 1.
KnnGraph knn_from_distances(const RealMatrix& distances, std::size_t n_neighbors);

/// Exact cosine kNN over the layer's node features. Requires N >= 2.
KnnGraph knn_graph(const Layer& layer, std::size_t n_neighbors,
                   RowTransform transform = RowTransform::none);

/// Local connectivity scale for one node.
struct SmoothKnn {
  double rho = 0.0;    // distance to the nearest neighbor
  double sigma = 1.0;  // bandwidth solving the log2(k) target
  bool fallback = false;  // bisection did not converge; sigma = mean distance
};

/// Per-node rho/sigma plus the directed membership strengths (n x k, aligned
/// with knn.neighbors).
struct DirectedMembership {
  std::vector<SmoothKnn> scales;
  std::vector<double> strengths;
};

DirectedMembership smooth_knn(const KnnGraph& knn, std::size_t n_neighbors);

/// Probabilistic union a + b - a*b.
constexpr double fuzzy_union(double a, double b) noexcept { return a + b - a * b; }

struct FuzzyEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;
  friend bool operator==(const FuzzyEdge&, const FuzzyEdge&) = default;
};

/// Undirected membership graph, edges sorted by (i, j), strengths in (0, 1].
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<FuzzyEdge> edges;

  RealMatrix dense() const;
};

/// Symmetrizes a dense directed membership matrix with fuzzy_union.
FuzzyGraph symmetrize(const RealMatrix& directed);

FuzzyGraph fuzzy_graph(const KnnGraph& knn, std::size_t n_neighbors);

}  // namespace tagalign
