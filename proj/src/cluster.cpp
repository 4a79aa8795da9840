#include "tagalign/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "tagalign/error.hpp"
#include "tagalign/simd/kernels.hpp"

namespace tagalign {
namespace {

// Lambda for a merge distance. Zero distances map to a large finite value
// so stability sums stay finite.
double lambda_of(double distance) { return 1.0 / std::max(distance, 1e-280); }

bool edge_less(const MstEdge& x, const MstEdge& y) {
  if (x.weight != y.weight) return x.weight < y.weight;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

struct DendrogramNode {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 1;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void attach(std::size_t child, std::size_t root) { parent_[child] = root; }
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct CondensedCluster {
  std::ptrdiff_t parent = -1;
  double lambda_birth = 0.0;
  double stability = 0.0;
  std::vector<std::size_t> children;
};

}  // namespace

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(cluster_count());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

RealMatrix euclidean_distances(const RealMatrix& points) {
  const auto& k = simd::active();
  const std::size_t n = points.rows();
  RealMatrix dist(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d =
          std::sqrt(k.squared_l2(points.row(i).data(), points.row(j).data(), points.cols()));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

std::vector<double> core_distances_from(const RealMatrix& distances, std::size_t min_samples) {
  const std::size_t n = distances.rows();
  if (min_samples == 0) throw ValidationError("min_samples must be positive");
  if (n <= min_samples) {
    throw ValidationError("core distances need more than " + std::to_string(min_samples) +
                          " points, got " + std::to_string(n));
  }
  std::vector<double> cores(n);
  std::vector<double> others;
  others.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(distances(i, j));
    }
    const auto nth = others.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
    std::nth_element(others.begin(), nth, others.end());
    cores[i] = *nth;
  }
  return cores;
}

std::vector<double> core_distances(const RealMatrix& points, std::size_t min_samples) {
  return core_distances_from(euclidean_distances(points), min_samples);
}

RealMatrix mutual_reachability(const RealMatrix& distances, std::span<const double> cores) {
  const std::size_t n = distances.rows();
  if (cores.size() != n) throw ValidationError("one core distance per point is required");
  RealMatrix mreach(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = std::max({cores[i], cores[j], distances(i, j)});
      mreach(i, j) = m;
      mreach(j, i) = m;
    }
  }
  return mreach;
}

std::vector<MstEdge> minimum_spanning_tree(const RealMatrix& weights) {
  const std::size_t n = weights.rows();
  std::vector<MstEdge> tree;
  if (n < 2) return tree;
  tree.reserve(n - 1);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(n, false);
  std::vector<MstEdge> best(n, MstEdge{0, 0, kInf});
  in_tree[0] = true;
  for (std::size_t v = 1; v < n; ++v) best[v] = {0, v, weights(0, v)};

  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      if (next == n || edge_less(best[v], best[next])) next = v;
    }
    tree.push_back(best[next]);
    in_tree[next] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const MstEdge candidate{std::min(next, v), std::max(next, v), weights(next, v)};
      if (edge_less(candidate, best[v])) best[v] = candidate;
    }
  }
  std::sort(tree.begin(), tree.end(), edge_less);
  return tree;
}

ClusterAssignment condense_and_extract(std::span<const MstEdge> mst, std::size_t n,
                                       const HdbscanOptions& options) {
  if (options.min_cluster_size < 2) throw ValidationError("min_cluster_size must be at least 2");
  ClusterAssignment result;
  result.labels.assign(n, -1);
  if (n < options.min_cluster_size || n < 2) return result;
  if (mst.size() != n - 1) throw ValidationError("MST must have N-1 edges");

  // Single-linkage dendrogram: leaves 0..n-1, merges n..2n-2.
  std::vector<MstEdge> edges(mst.begin(), mst.end());
  std::sort(edges.begin(), edges.end(), edge_less);
  std::vector<DendrogramNode> nodes(n);
  UnionFind sets(n);
  for (const auto& e : edges) {
    const std::size_t ra = sets.find(e.a);
    const std::size_t rb = sets.find(e.b);
    if (ra == rb) throw ValidationError("MST contains a cycle");
    const std::size_t merged = sets.add();
    nodes.push_back({ra, rb, e.weight, nodes[ra].size + nodes[rb].size});
    sets.attach(ra, merged);
    sets.attach(rb, merged);
  }

  // Condense top-down. Every point records the cluster it leaves and when.
  const std::size_t min_size = options.min_cluster_size;
  std::vector<CondensedCluster> clusters(1);
  std::vector<std::size_t> point_cluster(n, 0);
  std::vector<double> point_lambda(n, 0.0);

  const auto drop_points = [&](std::size_t node, std::size_t cluster, double lambda) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t top = stack.back();
      stack.pop_back();
      if (top < n) {
        point_cluster[top] = cluster;
        point_lambda[top] = lambda;
        clusters[cluster].stability += lambda - clusters[cluster].lambda_birth;
      } else {
        stack.push_back(nodes[top].left);
        stack.push_back(nodes[top].right);
      }
    }
  };

  // Merges at the same distance form one multi-way split, so the result does
  // not depend on the order in which tied MST edges were merged.
  const auto branches = [&](std::size_t node) {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{nodes[node].right, nodes[node].left};
    while (!stack.empty()) {
      const std::size_t top = stack.back();
      stack.pop_back();
      if (top >= n && nodes[top].distance == nodes[node].distance) {
        stack.push_back(nodes[top].right);
        stack.push_back(nodes[top].left);
      } else {
        out.push_back(top);
      }
    }
    return out;
  };

  std::vector<std::pair<std::size_t, std::size_t>> work{{nodes.size() - 1, 0}};
  while (!work.empty()) {
    const auto [node, cluster] = work.back();
    work.pop_back();
    if (node < n) {
      drop_points(node, cluster, clusters[cluster].lambda_birth);
      continue;
    }
    const double lambda = lambda_of(nodes[node].distance);
    const auto children = branches(node);
    const auto big = static_cast<std::size_t>(std::count_if(
        children.begin(), children.end(), [&](std::size_t c) { return nodes[c].size >= min_size; }));
    for (const std::size_t child : children) {
      if (nodes[child].size < min_size) {
        drop_points(child, cluster, lambda);
      } else if (big == 1) {
        work.emplace_back(child, cluster);
      } else {
        clusters[cluster].stability +=
            (lambda - clusters[cluster].lambda_birth) * static_cast<double>(nodes[child].size);
        const std::size_t id = clusters.size();
        clusters.push_back({static_cast<std::ptrdiff_t>(cluster), lambda, 0.0, {}});
        clusters[cluster].children.push_back(id);
        work.emplace_back(child, id);
      }
    }
  }

  // Excess of mass, children before parents (ids grow with depth).
  std::vector<bool> selected(clusters.size(), false);
  std::vector<double> subtree(clusters.size(), 0.0);
  for (std::size_t c = clusters.size(); c-- > 0;) {
    const auto& cl = clusters[c];
    if (cl.children.empty()) {
      selected[c] = true;
      subtree[c] = cl.stability;
      continue;
    }
    double children_sum = 0.0;
    for (const std::size_t child : cl.children) children_sum += subtree[child];
    const bool selectable = c != 0 || options.allow_single_cluster;
    if (selectable && cl.stability > children_sum) {
      selected[c] = true;
      subtree[c] = cl.stability;
      std::vector<std::size_t> stack(cl.children.begin(), cl.children.end());
      while (!stack.empty()) {
        const std::size_t d = stack.back();
        stack.pop_back();
        selected[d] = false;
        stack.insert(stack.end(), clusters[d].children.begin(), clusters[d].children.end());
      }
    } else {
      subtree[c] = children_sum;
    }
  }
  if (!options.allow_single_cluster) selected[0] = false;

  // A point takes the label of the nearest selected ancestor of the cluster
  // it fell out of.
  std::vector<int> raw_label(clusters.size(), -1);
  std::vector<double> stabilities;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (selected[c]) {
      raw_label[c] = static_cast<int>(stabilities.size());
      stabilities.push_back(clusters[c].stability);
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    for (std::ptrdiff_t c = static_cast<std::ptrdiff_t>(point_cluster[p]); c >= 0;
         c = clusters[static_cast<std::size_t>(c)].parent) {
      if (selected[static_cast<std::size_t>(c)]) {
        result.labels[p] = raw_label[static_cast<std::size_t>(c)];
        break;
      }
    }
  }
  result.stabilities = std::move(stabilities);
  canonicalize(result.labels, result.stabilities);
  return result;
}

ClusterAssignment hdbscan(const RealMatrix& points, const HdbscanOptions& options) {
  const std::size_t n = points.rows();
  if (n <= options.min_samples || n < options.min_cluster_size) {
    if (options.min_cluster_size < 2) throw ValidationError("min_cluster_size must be at least 2");
    ClusterAssignment all_noise;
    all_noise.labels.assign(n, -1);
    return all_noise;
  }
  const RealMatrix dist = euclidean_distances(points);
  const std::vector<double> cores = core_distances_from(dist, options.min_samples);
  const std::vector<MstEdge> tree = minimum_spanning_tree(mutual_reachability(dist, cores));
  return condense_and_extract(tree, n, options);
}

void canonicalize(std::vector<int>& labels, std::vector<double>& stabilities) {
  std::map<int, std::pair<std::size_t, std::size_t>> stats;  // label -> (size, first member)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = stats.emplace(labels[i], std::make_pair(std::size_t{0}, i));
    ++it->second.first;
  }
  std::vector<int> order;
  for (const auto& [label, s] : stats) order.push_back(label);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const auto& sx = stats.at(x);
    const auto& sy = stats.at(y);
    if (sx.first != sy.first) return sx.first > sy.first;
    return sx.second < sy.second;
  });
  std::map<int, int> remap;
  std::vector<double> reordered;
  for (std::size_t r = 0; r < order.size(); ++r) {
    remap[order[r]] = static_cast<int>(r);
    const auto old = static_cast<std::size_t>(order[r]);
    reordered.push_back(old < stabilities.size() ? stabilities[old] : 0.0);
  }
  for (int& label : labels) {
    if (label >= 0) label = remap.at(label);
  }
  stabilities = std::move(reordered);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("labelings differ in length");
  const auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : table) index += choose2(count);
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  for (const auto& [key, count] : cols) sum_cols += choose2(count);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = (sum_rows + sum_cols) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace tagalign
