#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/cluster.hpp"
#include "tagalign/types.hpp"

namespace tagalign {

/// Share of the layer's articles containing the tag.
double tag_prevalence(const Layer& layer, std::string_view tag);
double tag_prevalence(const Layer& layer, std::size_t node);

/// Mean prevalence of the members.
double cluster_prevalence(const Layer& layer, std::span<const std::size_t> members);

/// Weighted co-occurrence totals behind the cohesion score.
struct CohesionTerms {
  double alpha = 0.0;     // weight on pairs with both tags in the cluster
  double beta = 0.0;      // weight on pairs with at least one tag in the cluster
  double expected = 0.0;  // k(k-1) / (k(N-1))
};

CohesionTerms cohesion_terms(const Layer& layer, std::span<const std::size_t> members);

/// ln(alpha/beta) - ln(k(k-1) / (k(N-1))); nullopt when alpha or beta is 0.
/// Requires k >= 2.
std::optional<double> cluster_cohesion(const Layer& layer, std::span<const std::size_t> members);

struct ClusterMetricRow {
  std::string group;
  int period = 0;
  int cluster_label = -1;
  std::size_t size = 0;
  double prevalence = 0.0;
  std::optional<double> cohesion;
};

/// One row per non-noise cluster. Singleton clusters get no cohesion.
std::vector<ClusterMetricRow> cluster_metrics(const Layer& layer, const ClusterAssignment& assign);

/// `group,period,cluster_label,size,prevalence,cohesion`, empty cohesion when undefined.
std::string metrics_csv(std::span<const ClusterMetricRow> rows);

struct StabilityRow {
  std::string group;
  int period_from = 0;
  int period_to = 0;
  std::size_t shared = 0;
  std::optional<double> mean_displacement;  // nullopt when no tags are shared
};

/// Mean Euclidean distance of shared tags between consecutive frames of one
/// group. Requires at least two frames.
std::vector<StabilityRow> chain_stability(std::span<const EmbeddingFrame> frames);

std::string stability_csv(std::span<const StabilityRow> rows);

}  // namespace tagalign
