#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

/// Per-node labels (-1 = noise, otherwise 0..C-1) and per-cluster stability.
/// Clusters are numbered by descending size, ties by smallest member index.
struct ClusterAssignment {
  LayerKey key;
  std::vector<int> labels;
  std::vector<double> stabilities;

  std::size_t cluster_count() const noexcept { return stabilities.size(); }
  /// Member node indices per cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

struct HdbscanOptions {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 5;
  /// Lets the root of the condensed tree be selected as a cluster.
  bool allow_single_cluster = false;
};

/// Dense Euclidean distance matrix between rows.
RealMatrix euclidean_distances(const RealMatrix& points);

/// Distance to the min_samples-th nearest other point. Requires N > min_samples.
std::vector<double> core_distances(const RealMatrix& points, std::size_t min_samples);
std::vector<double> core_distances_from(const RealMatrix& distances, std::size_t min_samples);

/// max(core_i, core_j, d_ij); zero diagonal.
RealMatrix mutual_reachability(const RealMatrix& distances, std::span<const double> cores);

struct MstEdge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double weight = 0.0;
  friend bool operator==(const MstEdge&, const MstEdge&) = default;
};

/// Prim's algorithm on a dense symmetric weight matrix. Ties are broken by
/// (weight, min index, max index), so the tree is unique. Edges are returned
/// in that order.
std::vector<MstEdge> minimum_spanning_tree(const RealMatrix& weights);

/// Single-linkage hierarchy from the MST, condensed by min_cluster_size,
/// clusters chosen by excess of mass.
ClusterAssignment condense_and_extract(std::span<const MstEdge> mst, std::size_t n,
                                       const HdbscanOptions& options);

/// Full pipeline over a point cloud. N <= min_samples or N < min_cluster_size
/// yields all noise.
ClusterAssignment hdbscan(const RealMatrix& points, const HdbscanOptions& options);

/// Converts an arbitrary labeling into the canonical numbering above;
/// stabilities follow their clusters.
void canonicalize(std::vector<int>& labels, std::vector<double>& stabilities);

/// Adjusted Rand index between two labelings (noise counted as its own label).
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace tagalign
