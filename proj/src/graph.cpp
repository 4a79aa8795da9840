#include "tagalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "tagalign/error.hpp"
#include "tagalign/io.hpp"
#include "tagalign/simd/kernels.hpp"

namespace tagalign {

CountMatrix cooccurrence_matrix(std::span<const ArticleRecord> articles, const Vocabulary& vocab) {
  const std::size_t n = vocab.size();
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) index.emplace(vocab.tags[i], i);

  CountMatrix cooc(n, n, 0);
  std::vector<std::size_t> present;
  for (const auto& article : articles) {
    present.clear();
    for (const auto& tag : article.tags) {
      if (const auto it = index.find(tag); it != index.end()) present.push_back(it->second);
    }
    // Tags are unique per record, so every pair here is a pair of distinct nodes.
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = a + 1; b < present.size(); ++b) {
        ++cooc(present[a], present[b]);
        ++cooc(present[b], present[a]);
      }
    }
  }
  return cooc;
}

std::string cooccurrence_csv(const Layer& layer) {
  std::string out = "tag_i,tag_j,weight\n";
  for (std::size_t i = 0; i < layer.size(); ++i) {
    for (std::size_t j = i + 1; j < layer.size(); ++j) {
      const long long w = layer.cooc(i, j);
      if (w == 0) continue;
      out += io::csv_line({io::csv_escape(layer.vocab.tags[i]), io::csv_escape(layer.vocab.tags[j]),
                           std::to_string(w)});
      out += '\n';
    }
  }
  return out;
}

RealMatrix node_features(const Layer& layer, RowTransform transform) {
  const std::size_t n = layer.size();
  RealMatrix features(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto w = static_cast<double>(layer.cooc(i, j));
      features(i, j) = transform == RowTransform::log1p ? std::log1p(w) : w;
    }
  }
  return features;
}

RealMatrix cosine_distances(const RealMatrix& features) {
  const auto& k = simd::active();
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = features.row(i).data();
    norms[i] = std::sqrt(k.dot(row, row, dim));
  }
  RealMatrix dist(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 1.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        const double cosine = k.dot(features.row(i).data(), features.row(j).data(), dim) /
                              (norms[i] * norms[j]);
        d = std::clamp(1.0 - cosine, 0.0, 2.0);
      }
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

KnnGraph knn_from_distances(const RealMatrix& distances, std::size_t n_neighbors) {
  const std::size_t n = distances.rows();
  if (n < 2) throw ValidationError("kNN graph needs at least 2 nodes");
  if (n_neighbors == 0) throw ValidationError("n_neighbors must be positive");

  KnnGraph knn;
  knn.n = n;
  knn.k = std::min(n_neighbors, n - 1);
  knn.neighbors.reserve(n * knn.k);
  std::vector<Neighbor> candidates;
  candidates.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) candidates.push_back({j, distances(i, j)});
    }
    const auto by_distance_then_index = [](const Neighbor& a, const Neighbor& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      return a.index < b.index;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(knn.k),
                      candidates.end(), by_distance_then_index);
    knn.neighbors.insert(knn.neighbors.end(), candidates.begin(),
                         candidates.begin() + static_cast<std::ptrdiff_t>(knn.k));
  }
  return knn;
}

KnnGraph knn_graph(const Layer& layer, std::size_t n_neighbors, RowTransform transform) {
  if (layer.size() < 2) {
    throw ValidationError("layer " + layer.key.to_string() + " has fewer than 2 tags");
  }
  return knn_from_distances(cosine_distances(node_features(layer, transform)), n_neighbors);
}

DirectedMembership smooth_knn(const KnnGraph& knn, std::size_t n_neighbors) {
  constexpr int kMaxIterations = 64;
  constexpr double kTolerance = 1e-5;
  const double target = std::log2(static_cast<double>(std::max<std::size_t>(n_neighbors, 1)));

  DirectedMembership out;
  out.scales.resize(knn.n);
  out.strengths.resize(knn.neighbors.size());
  for (std::size_t i = 0; i < knn.n; ++i) {
    const auto row = knn.of(i);
    SmoothKnn& scale = out.scales[i];
    scale.rho = row.empty() ? 0.0 : row.front().distance;

    const auto membership_sum = [&](double sigma) {
      double sum = 0.0;
      for (const auto& nb : row) sum += std::exp(-std::max(0.0, nb.distance - scale.rho) / sigma);
      return sum;
    };

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    bool converged = false;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      const double sum = membership_sum(mid);
      if (std::abs(sum - target) < kTolerance) {
        converged = true;
        break;
      }
      if (sum > target) {
        hi = mid;
        mid = (lo + hi) / 2.0;
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
      }
    }
    if (converged) {
      scale.sigma = mid;
    } else {
      double mean = 0.0;
      for (const auto& nb : row) mean += nb.distance;
      mean = row.empty() ? 0.0 : mean / static_cast<double>(row.size());
      scale.sigma = mean > 0.0 ? mean : 1.0;
      scale.fallback = true;
    }

    for (std::size_t slot = 0; slot < row.size(); ++slot) {
      out.strengths[i * knn.k + slot] =
          std::exp(-std::max(0.0, row[slot].distance - scale.rho) / scale.sigma);
    }
  }
  return out;
}

RealMatrix FuzzyGraph::dense() const {
  RealMatrix m(n, n, 0.0);
  for (const auto& e : edges) {
    m(e.i, e.j) = e.weight;
    m(e.j, e.i) = e.weight;
  }
  return m;
}

FuzzyGraph symmetrize(const RealMatrix& directed) {
  FuzzyGraph graph;
  graph.n = directed.rows();
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t j = i + 1; j < graph.n; ++j) {
      const double w = std::min(1.0, fuzzy_union(directed(i, j), directed(j, i)));
      if (w > 0.0) graph.edges.push_back({i, j, w});
    }
  }
  return graph;
}

FuzzyGraph fuzzy_graph(const KnnGraph& knn, std::size_t n_neighbors) {
  const DirectedMembership membership = smooth_knn(knn, n_neighbors);
  RealMatrix directed(knn.n, knn.n, 0.0);
  for (std::size_t i = 0; i < knn.n; ++i) {
    const auto row = knn.of(i);
    for (std::size_t slot = 0; slot < row.size(); ++slot) {
      directed(i, row[slot].index) = membership.strengths[i * knn.k + slot];
    }
  }
  return symmetrize(directed);
}

}  // namespace tagalign
