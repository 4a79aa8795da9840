#include "tagalign/link.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <tuple>

#include "tagalign/error.hpp"
#include "tagalign/io.hpp"

namespace tagalign {
namespace {

constexpr double kZeroNorm = 1e-12;

double norm(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

const Layer* find_layer(std::span<const Layer> layers, const std::string& group, int period) {
  for (const auto& layer : layers) {
    if (layer.key.group == group && layer.key.period == period) return &layer;
  }
  return nullptr;
}

bool same_pair(const InterlingualLink& link, int period, const std::string& ga,
               const std::string& gb) {
  return link.period == period &&
         ((link.group_a == ga && link.group_b == gb) || (link.group_a == gb && link.group_b == ga));
}

// Tag of `link` on the side belonging to `group`.
const std::string& tag_for(const InterlingualLink& link, const std::string& group) {
  return link.group_a == group ? link.tag_a : link.tag_b;
}

}  // namespace

std::optional<std::vector<double>> TableVectors::lookup(std::string_view term) const {
  const auto it = table_.find(term);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void TableVectors::insert(std::string term, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw ValidationError("vector for '" + term + "' has dimension " +
                          std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  const double n = norm(vector);
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("zero vector for '" + term + "'");
  for (double& x : vector) x /= n;
  table_.insert_or_assign(std::move(term), std::move(vector));
}

TableVectors parse_vectors(std::istream& in) {
  std::string line;
  std::size_t line_number = 0;
  std::optional<TableVectors> table;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty()) continue;
    if (!table) {
      std::istringstream header(line);
      std::string tag;
      long long dim = 0;
      if (!(header >> tag >> dim) || tag != "#dim" || dim <= 0) {
        throw ValidationError("vector file line " + std::to_string(line_number) +
                              ": expected '#dim K' header");
      }
      table.emplace(static_cast<std::size_t>(dim));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("vector file line " + std::to_string(line_number) +
                            ": missing tab after term");
    }
    std::string term = line.substr(0, tab);
    std::vector<double> values;
    std::istringstream fields(line.substr(tab + 1));
    std::string field;
    while (fields >> field) values.push_back(io::parse_real(field, "vector component"));
    try {
      table->insert(std::move(term), std::move(values));
    } catch (const ValidationError& e) {
      throw ValidationError("vector file line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  if (!table) throw ValidationError("vector file is missing the '#dim K' header");
  return std::move(*table);
}

TableVectors load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vector file " + path.string());
  return parse_vectors(in);
}

StubVectors::StubVectors(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw ValidationError("stub vector dimension must be at least 2");
}

std::optional<std::vector<double>> StubVectors::lookup(std::string_view term) const {
  if (term.empty()) throw ValidationError("stub vectors are undefined for the empty term");
  std::mt19937_64 rng(fnv1a(term) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim_);
  double n = 0.0;
  while (!(n > kZeroNorm)) {
    for (double& x : v) x = gauss(rng);
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

StubVectors stub_vectors(std::size_t dim, std::uint64_t seed) { return StubVectors(dim, seed); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double denom = norm(a) * norm(b);
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

std::vector<std::size_t> top_prevalent(const Layer& layer, std::span<const std::size_t> members,
                                       std::size_t count) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  const auto counts = layer.tag_article_counts();
  std::sort(sorted.begin(), sorted.end(), [&](std::size_t x, std::size_t y) {
    if (counts[x] != counts[y]) return counts[x] > counts[y];
    return layer.vocab.tags[x] < layer.vocab.tags[y];
  });
  if (sorted.size() > count) sorted.resize(count);
  return sorted;
}

std::optional<std::vector<double>> cluster_vector(std::span<const std::size_t> members,
                                                  const Layer& layer,
                                                  const VectorProvider& provider) {
  if (members.empty()) throw ValidationError("cluster has no members");
  std::vector<double> mean(provider.dim(), 0.0);
  std::size_t hits = 0;
  for (const std::size_t node : top_prevalent(layer, members)) {
    const auto v = provider.lookup(layer.vocab.tags[node]);
    if (!v) continue;
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += (*v)[d];
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  for (double& x : mean) x /= static_cast<double>(hits);
  const double n = norm(mean);
  if (n < kZeroNorm) return std::nullopt;
  for (double& x : mean) x /= n;
  return mean;
}

ThresholdRule ThresholdRule::parse(std::string_view text) {
  if (text == "max_intra") return {Kind::max_intra, 0.0};
  if (text == "min_intra") return {Kind::min_intra, 0.0};
  if (text.starts_with("fixed:")) {
    return {Kind::fixed, io::parse_real(text.substr(6), "threshold_rule fixed value")};
  }
  throw ValidationError("unknown threshold rule '" + std::string(text) + "'");
}

std::string ThresholdRule::to_string() const {
  switch (kind) {
    case Kind::max_intra: return "max_intra";
    case Kind::min_intra: return "min_intra";
    case Kind::fixed: return "fixed:" + io::format_real(value);
  }
  return "unknown";
}

MatchResult match_clusters(const ClusterAssignment& assign_a, const ClusterAssignment& assign_b,
                           const Layer& layer_a, const Layer& layer_b,
                           const VectorProvider& provider, const ThresholdRule& rule) {
  if (layer_a.key.period != layer_b.key.period) {
    throw ValidationError("cluster matching needs layers of the same period");
  }
  const auto vectors_of = [&](const ClusterAssignment& assign, const Layer& layer) {
    std::vector<std::optional<std::vector<double>>> out;
    for (const auto& members : assign.members()) {
      out.push_back(cluster_vector(members, layer, provider));
    }
    return out;
  };
  const auto va = vectors_of(assign_a, layer_a);
  const auto vb = vectors_of(assign_b, layer_b);

  const auto best_intra = [](const std::vector<std::optional<std::vector<double>>>& v) {
    std::optional<double> best;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        if (!v[i] || !v[j]) continue;
        const double s = cosine_similarity(*v[i], *v[j]);
        if (!best || s > *best) best = s;
      }
    }
    return best;
  };

  MatchResult result;
  result.intra_a = best_intra(va);
  result.intra_b = best_intra(vb);
  switch (rule.kind) {
    case ThresholdRule::Kind::max_intra:
      // A side without two comparable clusters gives no evidence; use the
      // strictest possible bound for it.
      result.threshold = std::max(result.intra_a.value_or(1.0), result.intra_b.value_or(1.0));
      break;
    case ThresholdRule::Kind::min_intra:
      if (result.intra_a && result.intra_b) {
        result.threshold = std::min(*result.intra_a, *result.intra_b);
      } else {
        result.threshold = result.intra_a.value_or(result.intra_b.value_or(1.0));
      }
      break;
    case ThresholdRule::Kind::fixed:
      result.threshold = rule.value;
      break;
  }

  std::vector<ClusterMatch> candidates;
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (std::size_t j = 0; j < vb.size(); ++j) {
      if (!va[i] || !vb[j]) continue;
      const double s = cosine_similarity(*va[i], *vb[j]);
      if (s >= result.threshold - kSimilarityTolerance) {
        candidates.push_back({static_cast<int>(i), static_cast<int>(j), s});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const ClusterMatch& x, const ClusterMatch& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (x.cluster_a != y.cluster_a) return x.cluster_a < y.cluster_a;
    return x.cluster_b < y.cluster_b;
  });
  std::vector<bool> used_a(va.size(), false);
  std::vector<bool> used_b(vb.size(), false);
  for (const auto& c : candidates) {
    const auto a = static_cast<std::size_t>(c.cluster_a);
    const auto b = static_cast<std::size_t>(c.cluster_b);
    if (used_a[a] || used_b[b]) continue;
    used_a[a] = true;
    used_b[b] = true;
    result.matches.push_back(c);
  }
  return result;
}

std::string_view to_string(LinkSource source) noexcept {
  return source == LinkSource::matched ? "matched" : "override";
}

std::vector<InterlingualLink> derive_links(std::span<const ClusterMatch> matches,
                                           const ClusterAssignment& assign_a,
                                           const ClusterAssignment& assign_b,
                                           const Layer& layer_a, const Layer& layer_b,
                                           const VectorProvider& provider) {
  const auto members_a = assign_a.members();
  const auto members_b = assign_b.members();
  std::vector<InterlingualLink> links;
  for (const auto& match : matches) {
    const auto top_a = top_prevalent(layer_a, members_a.at(static_cast<std::size_t>(match.cluster_a)));
    const auto top_b = top_prevalent(layer_b, members_b.at(static_cast<std::size_t>(match.cluster_b)));
    std::optional<InterlingualLink> best;
    for (const std::size_t i : top_a) {
      const auto vi = provider.lookup(layer_a.vocab.tags[i]);
      if (!vi) continue;
      for (const std::size_t j : top_b) {
        const auto vj = provider.lookup(layer_b.vocab.tags[j]);
        if (!vj) continue;
        InterlingualLink candidate{layer_a.key.period, layer_a.key.group, layer_a.vocab.tags[i],
                                   layer_b.key.group, layer_b.vocab.tags[j],
                                   cosine_similarity(*vi, *vj), LinkSource::matched};
        const bool better =
            !best || candidate.similarity > best->similarity ||
            (candidate.similarity == best->similarity &&
             std::tie(candidate.tag_a, candidate.tag_b) < std::tie(best->tag_a, best->tag_b));
        if (better) best = std::move(candidate);
      }
    }
    if (best) links.push_back(std::move(*best));
  }
  return links;
}

std::vector<OverrideRow> parse_overrides(std::istream& in) {
  std::vector<OverrideRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    const auto fields = io::csv_split(line);
    if (rows.empty() && !fields.empty() && io::trim(fields[0]) == "period") continue;
    const std::string where = "override row " + std::to_string(line_number);
    if (fields.size() != 6) throw ValidationError(where + ": expected 6 fields");
    OverrideRow row;
    row.line = line_number;
    row.period = static_cast<int>(io::parse_integer(fields[0], where + " period"));
    row.group_a = io::trim(fields[1]);
    row.tag_a = io::trim(fields[2]);
    row.group_b = io::trim(fields[3]);
    row.tag_b = io::trim(fields[4]);
    const std::string action = io::trim(fields[5]);
    if (action == "add") {
      row.action = OverrideRow::Action::add;
    } else if (action == "remove") {
      row.action = OverrideRow::Action::remove;
    } else {
      throw ValidationError(where + ": unknown action '" + action + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<InterlingualLink> apply_overrides(std::vector<InterlingualLink> links,
                                              std::span<const OverrideRow> rows,
                                              std::span<const Layer> layers) {
  for (const auto& row : rows) {
    const std::string where = "override row " + std::to_string(row.line);
    for (const auto& [group, tag] : {std::pair{row.group_a, row.tag_a}, std::pair{row.group_b, row.tag_b}}) {
      const Layer* layer = find_layer(layers, group, row.period);
      if (layer == nullptr || !layer->vocab.index_of(tag)) {
        throw ValidationError(where + ": unknown tag '" + tag + "' in " + group + "/" +
                              std::to_string(row.period));
      }
    }

    if (row.action == OverrideRow::Action::add) {
      std::erase_if(links, [&](const InterlingualLink& link) {
        return link.source == LinkSource::matched &&
               same_pair(link, row.period, row.group_a, row.group_b) &&
               (tag_for(link, row.group_a) == row.tag_a || tag_for(link, row.group_b) == row.tag_b);
      });
      links.push_back({row.period, row.group_a, row.tag_a, row.group_b, row.tag_b, 1.0,
                       LinkSource::override_row});
    } else {
      std::erase_if(links, [&](const InterlingualLink& link) {
        return same_pair(link, row.period, row.group_a, row.group_b) &&
               tag_for(link, row.group_a) == row.tag_a && tag_for(link, row.group_b) == row.tag_b;
      });
    }
  }
  return links;
}

void check_link_integrity(std::span<const InterlingualLink> links, std::span<const Layer> layers) {
  for (const auto& link : links) {
    for (const auto& [group, tag] : {std::pair{link.group_a, link.tag_a}, std::pair{link.group_b, link.tag_b}}) {
      const Layer* layer = find_layer(layers, group, link.period);
      if (layer == nullptr || !layer->vocab.index_of(tag)) {
        throw ValidationError("link endpoint '" + tag + "' missing from " + group + "/" +
                              std::to_string(link.period));
      }
    }
    if (!(link.similarity >= -1.0 && link.similarity <= 1.0)) {
      throw ValidationError("link similarity out of range");
    }
  }
}

std::string links_csv(std::span<const InterlingualLink> links) {
  std::string out = "period,group_a,tag_a,group_b,tag_b,similarity,source\n";
  for (const auto& link : links) {
    out += io::csv_line({std::to_string(link.period), io::csv_escape(link.group_a),
                         io::csv_escape(link.tag_a), io::csv_escape(link.group_b),
                         io::csv_escape(link.tag_b), io::format_real(link.similarity),
                         std::string(to_string(link.source))});
    out += '\n';
  }
  return out;
}

}  // namespace tagalign
