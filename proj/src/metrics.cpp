#include "tagalign/metrics.hpp"

#include <cmath>
#include <unordered_map>

#include "tagalign/error.hpp"
#include "tagalign/io.hpp"

namespace tagalign {

double tag_prevalence(const Layer& layer, std::size_t node) {
  if (node >= layer.size()) throw ValidationError("tag index out of range");
  if (layer.article_total <= 0) throw ValidationError("layer has no articles");
  return static_cast<double>(layer.tag_article_counts()[node]) /
         static_cast<double>(layer.article_total);
}

double tag_prevalence(const Layer& layer, std::string_view tag) {
  const auto node = layer.vocab.index_of(tag);
  if (!node) {
    throw ValidationError("tag '" + std::string(tag) + "' is not in layer " + layer.key.to_string());
  }
  return tag_prevalence(layer, *node);
}

double cluster_prevalence(const Layer& layer, std::span<const std::size_t> members) {
  if (members.empty()) throw ValidationError("cluster has no members");
  double sum = 0.0;
  for (const std::size_t node : members) sum += tag_prevalence(layer, node);
  return sum / static_cast<double>(members.size());
}

CohesionTerms cohesion_terms(const Layer& layer, std::span<const std::size_t> members) {
  const std::size_t n = layer.size();
  const std::size_t k = members.size();
  if (k < 2) throw ValidationError("cohesion needs a cluster of at least 2 tags");
  if (n < 2) throw ValidationError("cohesion needs a layer of at least 2 tags");

  std::vector<bool> inside(n, false);
  for (const std::size_t node : members) {
    if (node >= n) throw ValidationError("cluster member out of range");
    inside[node] = true;
  }
  CohesionTerms terms;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto w = static_cast<double>(layer.cooc(i, j));
      if (w == 0.0) continue;
      if (inside[i] && inside[j]) terms.alpha += w;
      if (inside[i] || inside[j]) terms.beta += w;
    }
  }
  const auto kd = static_cast<double>(k);
  terms.expected = (kd * (kd - 1.0)) / (kd * (static_cast<double>(n) - 1.0));
  return terms;
}

std::optional<double> cluster_cohesion(const Layer& layer, std::span<const std::size_t> members) {
  const CohesionTerms t = cohesion_terms(layer, members);
  if (t.alpha <= 0.0 || t.beta <= 0.0) return std::nullopt;
  return std::log(t.alpha / t.beta) - std::log(t.expected);
}

std::vector<ClusterMetricRow> cluster_metrics(const Layer& layer, const ClusterAssignment& assign) {
  if (assign.labels.size() != layer.size()) {
    throw ValidationError("cluster labels do not cover layer " + layer.key.to_string());
  }
  std::vector<ClusterMetricRow> rows;
  const auto members = assign.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) continue;
    ClusterMetricRow row;
    row.group = layer.key.group;
    row.period = layer.key.period;
    row.cluster_label = static_cast<int>(c);
    row.size = members[c].size();
    row.prevalence = cluster_prevalence(layer, members[c]);
    if (members[c].size() >= 2 && layer.size() >= 2) row.cohesion = cluster_cohesion(layer, members[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metrics_csv(std::span<const ClusterMetricRow> rows) {
  std::string out = "group,period,cluster_label,size,prevalence,cohesion\n";
  for (const auto& row : rows) {
    out += io::csv_line({io::csv_escape(row.group), std::to_string(row.period),
                         std::to_string(row.cluster_label), std::to_string(row.size),
                         io::format_real(row.prevalence),
                         row.cohesion ? io::format_real(*row.cohesion) : std::string{}});
    out += '\n';
  }
  return out;
}

std::vector<StabilityRow> chain_stability(std::span<const EmbeddingFrame> frames) {
  if (frames.size() < 2) throw ValidationError("chain stability needs at least two frames");
  std::vector<StabilityRow> rows;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const auto& prev = frames[t];
    const auto& next = frames[t + 1];
    if (prev.dim() != next.dim()) throw ValidationError("frames differ in dimension");
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < prev.tags.size(); ++i) index.emplace(prev.tags[i], i);

    StabilityRow row{next.key.group, prev.key.period, next.key.period, 0, std::nullopt};
    double total = 0.0;
    for (std::size_t j = 0; j < next.tags.size(); ++j) {
      const auto it = index.find(next.tags[j]);
      if (it == index.end()) continue;
      double d2 = 0.0;
      for (std::size_t d = 0; d < prev.dim(); ++d) {
        const double diff = next.coords(j, d) - prev.coords(it->second, d);
        d2 += diff * diff;
      }
      total += std::sqrt(d2);
      ++row.shared;
    }
    if (row.shared > 0) row.mean_displacement = total / static_cast<double>(row.shared);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string stability_csv(std::span<const StabilityRow> rows) {
  std::string out = "group,period_from,period_to,shared,mean_displacement\n";
  for (const auto& row : rows) {
    out += io::csv_line({io::csv_escape(row.group), std::to_string(row.period_from),
                         std::to_string(row.period_to), std::to_string(row.shared),
                         row.mean_displacement ? io::format_real(*row.mean_displacement)
                                               : std::string{}});
    out += '\n';
  }
  return out;
}

}  // namespace tagalign
