#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/cluster.hpp"
#include "tagalign/types.hpp"

namespace tagalign {

/// Source of unit-length semantic vectors for terms.
class VectorProvider {
 public:
  virtual ~VectorProvider() = default;
  virtual std::size_t dim() const noexcept = 0;
  /// The term's unit vector, or nullopt when the provider has no entry.
  virtual std::optional<std::vector<double>> lookup(std::string_view term) const = 0;
};

/// Vectors read from a `#dim K` TSV file, re-normalized on load.
class TableVectors final : public VectorProvider {
 public:
  explicit TableVectors(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept override { return dim_; }
  std::optional<std::vector<double>> lookup(std::string_view term) const override;

  /// Stores a normalized copy; throws on wrong dimension or zero norm.
  void insert(std::string term, std::vector<double> vector);
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>, std::less<>> table_;
};

TableVectors parse_vectors(std::istream& in);
TableVectors load_vectors(const std::filesystem::path& path);

/// Deterministic pseudo-random unit vectors keyed by the term's bytes, so
/// equal spellings collide across groups. Test double for real embeddings.
class StubVectors final : public VectorProvider {
 public:
  StubVectors(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept override { return dim_; }
  std::optional<std::vector<double>> lookup(std::string_view term) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

StubVectors stub_vectors(std::size_t dim, std::uint64_t seed);

/// Cosine similarity of two vectors, clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Up to `count` members with the highest prevalence, ties by tag bytes.
std::vector<std::size_t> top_prevalent(const Layer& layer, std::span<const std::size_t> members,
                                       std::size_t count = 3);

/// Normalized mean vector of the three most prevalent members. nullopt marks
/// the cluster unmatchable (no provider hits, or the hits cancel out).
std::optional<std::vector<double>> cluster_vector(std::span<const std::size_t> members,
                                                  const Layer& layer,
                                                  const VectorProvider& provider);

/// Threshold for accepting a cross-group cluster pair.
struct ThresholdRule {
  enum class Kind { max_intra, min_intra, fixed };
  Kind kind = Kind::max_intra;
  double value = 0.0;  // used by Kind::fixed

  /// Parses `max_intra`, `min_intra`, or `fixed:<value>`.
  static ThresholdRule parse(std::string_view text);
  std::string to_string() const;
};

/// Similarities closer than this to the threshold count as meeting it.
inline constexpr double kSimilarityTolerance = 1e-12;

struct ClusterMatch {
  int cluster_a = -1;
  int cluster_b = -1;
  double similarity = 0.0;
  friend bool operator==(const ClusterMatch&, const ClusterMatch&) = default;
};

struct MatchResult {
  std::vector<ClusterMatch> matches;  // in acceptance order
  double threshold = 0.0;
  std::optional<double> intra_a;  // best similarity between two clusters of A
  std::optional<double> intra_b;
};

/// Greedy one-to-one matching of the clusters of two groups in one period.
MatchResult match_clusters(const ClusterAssignment& assign_a, const ClusterAssignment& assign_b,
                           const Layer& layer_a, const Layer& layer_b,
                           const VectorProvider& provider, const ThresholdRule& rule = {});

enum class LinkSource { matched, override_row };

std::string_view to_string(LinkSource source) noexcept;

struct InterlingualLink {
  int period = 0;
  std::string group_a;
  std::string tag_a;
  std::string group_b;
  std::string tag_b;
  double similarity = 0.0;
  LinkSource source = LinkSource::matched;
  friend bool operator==(const InterlingualLink&, const InterlingualLink&) = default;
};

/// One link per matched pair: the most similar pair among the two clusters'
/// top-3 prevalent terms, ties by (tag_a, tag_b).
std::vector<InterlingualLink> derive_links(std::span<const ClusterMatch> matches,
                                           const ClusterAssignment& assign_a,
                                           const ClusterAssignment& assign_b,
                                           const Layer& layer_a, const Layer& layer_b,
                                           const VectorProvider& provider);

struct OverrideRow {
  enum class Action { add, remove };
  std::size_t line = 0;
  int period = 0;
  std::string group_a;
  std::string tag_a;
  std::string group_b;
  std::string tag_b;
  Action action = Action::add;
};

/// CSV `period,group_a,tag_a,group_b,tag_b,action`; an optional header line
/// is skipped.
std::vector<OverrideRow> parse_overrides(std::istream& in);

/// Adds (replacing conflicting matched links) or removes links. Rows that
/// name a tag missing from the layer raise ValidationError.
std::vector<InterlingualLink> apply_overrides(std::vector<InterlingualLink> links,
                                              std::span<const OverrideRow> rows,
                                              std::span<const Layer> layers);

/// Throws ValidationError if an endpoint is missing from its layer.
void check_link_integrity(std::span<const InterlingualLink> links, std::span<const Layer> layers);

std::string links_csv(std::span<const InterlingualLink> links);

}  // namespace tagalign
