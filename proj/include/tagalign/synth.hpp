#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

struct SynthOptions {
  std::vector<std::string> groups{"en", "de", "es", "ru"};
  int period_start = 2018;
  int period_end = 2023;
  std::size_t articles_per_layer = 1200;
  std::size_t topics = 8;
  std::size_t tags_per_topic = 30;
  std::size_t core_tags = 3;  // per topic, spelled identically in every group
  // In this period every non-base group spells all but one topic's core tags
  // in its own way, so that only one interlingual link can be found.
  std::optional<int> sparse_link_period;
  std::uint64_t seed = 0;
};

/// Topic-structured tagged articles; the first group is the base group.
std::vector<ArticleRecord> synthetic_corpus(const SynthOptions& options);

/// One JSON object per line, in the format read by parse_articles.
std::string to_jsonl(std::span<const ArticleRecord> articles);

struct ChainOptions {
  std::size_t nodes = 200;
  std::size_t periods = 6;
  double overlap = 0.9;  // share of vocabulary carried to the next period
  std::size_t topics = 8;
  std::size_t articles = 1200;
  std::uint64_t seed = 0;
};

/// Layers of a single group whose vocabularies keep `overlap` of their tags
/// from one period to the next.
std::vector<Layer> synthetic_chain(const ChainOptions& options);

}  // namespace tagalign
