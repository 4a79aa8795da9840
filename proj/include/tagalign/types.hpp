#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/matrix.hpp"

namespace tagalign {

/// One tagged document.
struct ArticleRecord {
  std::string id;
  std::string group;
  std::chrono::year_month_day date;
  std::vector<std::string> tags;  // normalized, unique, first-occurrence order

  int year() const noexcept { return static_cast<int>(date.year()); }
};

struct LayerKey {
  std::string group;
  int period = 0;

  auto operator<=>(const LayerKey&) const = default;
  std::string to_string() const { return group + "/" + std::to_string(period); }
};

/// Usage-ranked tag list. usage_counts[i] is the number of distinct
/// articles containing tags[i]; counts are non-increasing, ties ordered by
/// ascending tag bytes.
struct Vocabulary {
  std::vector<std::string> tags;
  std::vector<long long> usage_counts;

  std::size_t size() const noexcept { return tags.size(); }
  bool empty() const noexcept { return tags.empty(); }
  std::optional<std::size_t> index_of(std::string_view tag) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// One (group, period) co-occurrence network.
struct Layer {
  LayerKey key;
  Vocabulary vocab;
  CountMatrix cooc;  // symmetric, zero diagonal, aligned to vocab order
  long long article_total = 0;

  std::size_t size() const noexcept { return vocab.size(); }
  std::span<const long long> tag_article_counts() const noexcept { return vocab.usage_counts; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class Space { intermediate, aligned, final };

std::string_view to_string(Space space) noexcept;

/// Coordinates for a layer's vocabulary, one row per tag in vocab order.
struct EmbeddingFrame {
  LayerKey key;
  Space space = Space::intermediate;
  std::vector<std::string> tags;
  RealMatrix coords;

  std::size_t dim() const noexcept { return coords.cols(); }
};

}  // namespace tagalign
