#include "tagalign/ingest.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include "json.hpp"
#include <unordered_map>
#include <unordered_set>

#include "tagalign/error.hpp"
#include "tagalign/graph.hpp"
#include "tagalign/io.hpp"

namespace tagalign {
namespace {

[[noreturn]] void fail_line(std::size_t line_number, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_number) + ": " + what);
}

std::chrono::year_month_day parse_iso_date(std::string_view text, std::size_t line_number) {
  // YYYY-MM-DD, optionally followed by a time part (THH:MM...).
  auto digits = [&](std::size_t pos, std::size_t len) {
    int value = 0;
    const auto* first = text.data() + pos;
    const auto result = std::from_chars(first, first + len, value);
    if (result.ec != std::errc{} || result.ptr != first + len) {
      fail_line(line_number, "invalid date '" + std::string(text) + "'");
    }
    return value;
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
      (text.size() > 10 && text[10] != 'T' && text[10] != ' ')) {
    fail_line(line_number, "invalid date '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day date{std::chrono::year{digits(0, 4)},
                                         std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                         std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
  if (!date.ok()) fail_line(line_number, "invalid date '" + std::string(text) + "'");
  return date;
}

const std::string& required_string(const nlohmann::json& object, const char* field,
                                   std::size_t line_number) {
  const auto it = object.find(field);
  if (it == object.end()) fail_line(line_number, std::string("missing field '") + field + "'");
  if (!it->is_string()) fail_line(line_number, std::string("field '") + field + "' must be a string");
  return it->get_ref<const std::string&>();
}

}  // namespace

std::optional<std::size_t> Vocabulary::index_of(std::string_view tag) const {
  const auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tags.begin());
}

std::string_view to_string(Space space) noexcept {
  switch (space) {
    case Space::intermediate: return "intermediate";
    case Space::aligned: return "aligned";
    case Space::final: return "final";
  }
  return "unknown";
}

std::string normalize_tag(std::string_view raw) {
  const std::string trimmed = io::trim(raw);
  if (trimmed.empty()) return trimmed;
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(trimmed.data(),
                                                                   static_cast<int32_t>(trimmed.size())));
  const icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw ValidationError("cannot normalize tag '" + trimmed + "'");
  std::string out;
  normalized.toUTF8String(out);
  return io::trim(out);
}

ArticleRecord parse_article(std::string_view line, std::size_t line_number) {
  nlohmann::json object;
  try {
    object = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail_line(line_number, std::string("malformed JSON: ") + e.what());
  }
  if (!object.is_object()) fail_line(line_number, "record must be a JSON object");

  ArticleRecord record;
  record.id = required_string(object, "id", line_number);
  if (record.id.empty()) fail_line(line_number, "empty id");
  record.group = required_string(object, "group", line_number);
  if (record.group.empty()) fail_line(line_number, "empty group");
  record.date = parse_iso_date(required_string(object, "date", line_number), line_number);

  const auto tags = object.find("tags");
  if (tags == object.end()) fail_line(line_number, "missing field 'tags'");
  if (!tags->is_array()) fail_line(line_number, "field 'tags' must be an array");
  std::unordered_set<std::string> seen;
  for (const auto& tag : *tags) {
    if (!tag.is_string()) fail_line(line_number, "tags must be strings");
    std::string normalized = normalize_tag(tag.get_ref<const std::string&>());
    if (normalized.empty()) continue;
    if (seen.insert(normalized).second) record.tags.push_back(std::move(normalized));
  }
  return record;
}

std::vector<ArticleRecord> parse_articles(std::istream& in) {
  std::vector<ArticleRecord> records;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    ArticleRecord record = parse_article(line, line_number);
    const auto [it, inserted] = first_line.emplace(record.id, line_number);
    if (!inserted) {
      fail_line(line_number, "duplicate id '" + record.id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
    }
    records.push_back(std::move(record));
  }
  return records;
}

Vocabulary top_k_tags(std::span<const ArticleRecord> articles, std::size_t k) {
  if (k == 0) throw ValidationError("top_k must be at least 1");
  std::unordered_map<std::string_view, long long> counts;
  for (const auto& article : articles) {
    for (const auto& tag : article.tags) ++counts[tag];
  }
  std::vector<std::pair<std::string_view, long long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);

  Vocabulary vocab;
  vocab.tags.reserve(ranked.size());
  vocab.usage_counts.reserve(ranked.size());
  for (const auto& [tag, count] : ranked) {
    vocab.tags.emplace_back(tag);
    vocab.usage_counts.push_back(count);
  }
  return vocab;
}

std::vector<Layer> build_layers(std::span<const ArticleRecord> articles,
                                const LayerConfig& config) {
  if (config.period_end < config.period_start) {
    throw ValidationError("empty period range " + std::to_string(config.period_start) + "-" +
                          std::to_string(config.period_end));
  }
  std::map<LayerKey, std::vector<ArticleRecord>> buckets;
  for (const auto& article : articles) {
    const int year = article.year();
    if (year < config.period_start || year > config.period_end) continue;
    buckets[LayerKey{article.group, year}].push_back(article);
  }

  std::vector<Layer> layers;
  layers.reserve(buckets.size());
  for (auto& [key, bucket] : buckets) {
    Layer layer;
    layer.key = key;
    layer.vocab = top_k_tags(bucket, config.top_k);
    layer.article_total = static_cast<long long>(bucket.size());
    layer.cooc = layer.vocab.empty() ? CountMatrix{} : cooccurrence_matrix(bucket, layer.vocab);
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace tagalign
