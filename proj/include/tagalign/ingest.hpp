#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

/// Unicode NFC with surrounding whitespace removed. Case is preserved.
std::string normalize_tag(std::string_view raw);

/// Parses one JSON object line. `line_number` is 1-based and only used in
/// error messages.
ArticleRecord parse_article(std::string_view line, std::size_t line_number);

/// Reads line-delimited records. Blank lines are skipped; malformed lines
/// and duplicate ids raise ValidationError naming the line.
std::vector<ArticleRecord> parse_articles(std::istream& in);

/// Tags ranked by the number of distinct articles containing them.
Vocabulary top_k_tags(std::span<const ArticleRecord> articles, std::size_t k);

struct LayerConfig {
  int period_start = 2018;
  int period_end = 2023;
  std::size_t top_k = 200;
};

/// One layer per (group, period) that has at least one article inside the
/// configured period range, ordered by (group, period).
std::vector<Layer> build_layers(std::span<const ArticleRecord> articles,
                                const LayerConfig& config);

}  // namespace tagalign
