#include "tagalign/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "tagalign/error.hpp"
#include "tagalign/graph.hpp"

namespace tagalign {
namespace {

constexpr const char* kTopicNames[] = {"politics", "health", "economy", "conflict",
                                       "climate",  "sport",  "science", "culture"};

std::string topic_name(std::size_t topic) {
  constexpr std::size_t named = std::size(kTopicNames);
  return topic < named ? kTopicNames[topic] : "topic" + std::to_string(topic);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out;
}

// Zipf-like weights 1/(r+1) over `n` ranks.
std::discrete_distribution<std::size_t> zipf(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / static_cast<double>(r + 1);
  return {w.begin(), w.end()};
}

// Topic popularity drifts smoothly from year to year.
std::vector<double> topic_weights(std::size_t topics, int step) {
  std::vector<double> w(topics);
  for (std::size_t t = 0; t < topics; ++t) {
    w[t] = 1.0 + 0.5 * std::sin(static_cast<double>(t) * 1.3 + 0.7 * static_cast<double>(step));
  }
  return w;
}

std::string date_id(int year, std::size_t index) {
  return std::to_string(year) + "-" + std::to_string(index);
}

}  // namespace

std::vector<ArticleRecord> synthetic_corpus(const SynthOptions& options) {
  if (options.groups.empty()) throw ValidationError("synthetic corpus needs at least one group");
  if (options.period_end < options.period_start) throw ValidationError("empty period range");
  if (options.topics == 0 || options.tags_per_topic <= options.core_tags) {
    throw ValidationError("each topic needs more tags than core tags");
  }
  const std::size_t specific = options.tags_per_topic - options.core_tags;
  std::vector<ArticleRecord> articles;
  for (std::size_t g = 0; g < options.groups.size(); ++g) {
    const std::string& group = options.groups[g];
    for (int year = options.period_start; year <= options.period_end; ++year) {
      std::mt19937_64 rng(mix(options.seed, g, static_cast<std::uint64_t>(year)));
      const auto weights = topic_weights(options.topics, year - options.period_start);
      std::discrete_distribution<std::size_t> pick_topic(weights.begin(), weights.end());
      auto pick_specific = zipf(specific);
      std::bernoulli_distribution take_core(0.8);
      std::bernoulli_distribution stray(0.1);
      std::uniform_int_distribution<std::size_t> extra(2, 4);
      std::uniform_int_distribution<unsigned> day(1, 28);
      std::uniform_int_distribution<unsigned> month(1, 12);
      const bool sparse = g > 0 && options.sparse_link_period == year;

      for (std::size_t a = 0; a < options.articles_per_layer; ++a) {
        const std::size_t topic = pick_topic(rng);
        const std::string name = topic_name(topic);
        ArticleRecord record;
        record.id = group + "-" + date_id(year, a);
        record.group = group;
        record.date = std::chrono::year{year} / std::chrono::month{month(rng)} / std::chrono::day{day(rng)};
        for (std::size_t c = 0; c < options.core_tags; ++c) {
          if (!take_core(rng)) continue;
          const bool shared = !sparse || topic == 0;
          record.tags.push_back(shared ? name + ":" + std::to_string(c)
                                       : group + "-" + name + ":" + std::to_string(c));
        }
        const std::size_t n_extra = extra(rng);
        for (std::size_t e = 0; e < n_extra; ++e) {
          std::size_t tag_topic = topic;
          if (stray(rng)) tag_topic = pick_topic(rng);
          record.tags.push_back(group + "-" + topic_name(tag_topic) + "-" +
                                std::to_string(pick_specific(rng)));
        }
        std::vector<std::string> unique;
        for (auto& tag : record.tags) {
          if (std::find(unique.begin(), unique.end(), tag) == unique.end()) unique.push_back(std::move(tag));
        }
        record.tags = std::move(unique);
        articles.push_back(std::move(record));
      }
    }
  }
  return articles;
}

std::string to_jsonl(std::span<const ArticleRecord> articles) {
  std::string out;
  for (const auto& record : articles) {
    char date[16];
    std::snprintf(date, sizeof date, "%04d-%02u-%02u", static_cast<int>(record.date.year()),
                  static_cast<unsigned>(record.date.month()), static_cast<unsigned>(record.date.day()));
    nlohmann::ordered_json line;
    line["id"] = record.id;
    line["group"] = record.group;
    line["date"] = date;
    line["tags"] = record.tags;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<Layer> synthetic_chain(const ChainOptions& options) {
  if (options.nodes < 2 || options.periods == 0 || options.topics == 0) {
    throw ValidationError("synthetic chain needs at least two nodes, one period and one topic");
  }
  if (!(options.overlap >= 0.0 && options.overlap <= 1.0)) throw ValidationError("overlap must lie in [0, 1]");
  std::mt19937_64 rng(mix(options.seed, 0xC4A1, options.nodes));
  const auto replaced = static_cast<std::size_t>(
      std::llround((1.0 - options.overlap) * static_cast<double>(options.nodes)));

  // Each tag keeps one topic for its whole life; topics are assigned round robin.
  std::size_t next_id = 0;
  auto fresh_tag = [&] {
    const std::size_t id = next_id++;
    return std::pair{"tag" + std::to_string(id), id % options.topics};
  };
  std::vector<std::pair<std::string, std::size_t>> active;
  for (std::size_t i = 0; i < options.nodes; ++i) active.push_back(fresh_tag());

  std::vector<Layer> layers;
  for (std::size_t p = 0; p < options.periods; ++p) {
    if (p > 0) {
      std::vector<std::size_t> order(active.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t r = 0; r < replaced; ++r) active[order[r]] = fresh_tag();
    }
    std::vector<std::vector<std::size_t>> by_topic(options.topics);
    for (std::size_t i = 0; i < active.size(); ++i) by_topic[active[i].second].push_back(i);

    Vocabulary vocab;
    for (const auto& [tag, topic] : active) vocab.tags.push_back(tag);
    vocab.usage_counts.assign(active.size(), 0);

    const auto weights = topic_weights(options.topics, static_cast<int>(p));
    std::discrete_distribution<std::size_t> pick_topic(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> size(3, 6);
    std::bernoulli_distribution stray(0.05);
    std::vector<ArticleRecord> articles;
    const int year = 2018 + static_cast<int>(p);
    for (std::size_t a = 0; a < options.articles; ++a) {
      std::size_t topic = pick_topic(rng);
      while (by_topic[topic].empty()) topic = (topic + 1) % options.topics;
      ArticleRecord record;
      record.id = date_id(year, a);
      record.group = "chain";
      record.date = std::chrono::year{year} / std::chrono::January / std::chrono::day{1};
      const std::size_t n_tags = size(rng);
      for (std::size_t t = 0; t < n_tags; ++t) {
        std::size_t from = topic;
        if (stray(rng)) from = pick_topic(rng);
        const auto& pool = by_topic[from].empty() ? by_topic[topic] : by_topic[from];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::string& tag = vocab.tags[pool[pick(rng)]];
        if (std::find(record.tags.begin(), record.tags.end(), tag) == record.tags.end()) {
          record.tags.push_back(tag);
        }
      }
      for (const auto& tag : record.tags) ++vocab.usage_counts[*vocab.index_of(tag)];
      articles.push_back(std::move(record));
    }
    Layer layer;
    layer.key = {"chain", year};
    layer.cooc = cooccurrence_matrix(articles, vocab);
    layer.vocab = std::move(vocab);
    layer.article_total = static_cast<long long>(articles.size());
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace tagalign
