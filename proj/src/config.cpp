#include "tagalign/config.hpp"

#include <set>

#include "json.hpp"
#include "tagalign/error.hpp"
#include "tagalign/io.hpp"

namespace tagalign {
namespace {

using nlohmann::json;

template <typename T>
T get_number(const json& doc, const char* key, T fallback) {
  const auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number()) throw ValidationError(std::string("config '") + key + "' must be a number");
  if constexpr (std::is_unsigned_v<T>) {
    if (!it->is_number_unsigned()) {
      throw ValidationError(std::string("config '") + key + "' must be a non-negative integer");
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ValidationError(std::string("config '") + key + "' must be an integer");
  }
  return it->get<T>();
}

std::optional<std::string> get_string(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("config '") + key + "' must be a string");
  return it->get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  static const std::set<std::string> kKnown = {
      "articles", "vectors", "overrides", "period_start", "period_end", "top_k", "base_group",
      "n_neighbors", "row_transform", "dim", "lambda", "min_dist", "spread", "n_epochs",
      "negative_samples", "learning_rate", "min_cluster_size", "min_samples",
      "allow_single_cluster", "threshold_rule", "stub_vector_dim", "grid_resolution",
      "bandwidth", "seed"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) throw ValidationError("unknown config key '" + key + "'");
  }

  PipelineConfig c;
  const auto articles = get_string(doc, "articles");
  if (!articles) throw ValidationError("config is missing 'articles'");
  c.articles = resolve(base_dir, *articles);
  if (const auto v = get_string(doc, "vectors")) c.vectors = resolve(base_dir, *v);
  if (const auto v = get_string(doc, "overrides")) c.overrides = resolve(base_dir, *v);

  c.layers.period_start = get_number<int>(doc, "period_start", c.layers.period_start);
  c.layers.period_end = get_number<int>(doc, "period_end", c.layers.period_end);
  c.layers.top_k = get_number<std::size_t>(doc, "top_k", c.layers.top_k);
  c.base_group = get_string(doc, "base_group").value_or(c.base_group);

  c.graph.n_neighbors = get_number<std::size_t>(doc, "n_neighbors", c.graph.n_neighbors);
  const std::string transform = get_string(doc, "row_transform").value_or("none");
  if (transform == "none") {
    c.graph.transform = RowTransform::none;
  } else if (transform == "log1p") {
    c.graph.transform = RowTransform::log1p;
  } else {
    throw ValidationError("row_transform must be 'none' or 'log1p'");
  }

  c.embed.dim = get_number<std::size_t>(doc, "dim", c.embed.dim);
  c.lambda = get_number<double>(doc, "lambda", c.lambda);
  c.embed.min_dist = get_number<double>(doc, "min_dist", c.embed.min_dist);
  c.embed.spread = get_number<double>(doc, "spread", c.embed.spread);
  c.embed.n_epochs = get_number<std::size_t>(doc, "n_epochs", c.embed.n_epochs);
  c.embed.negative_samples = get_number<std::size_t>(doc, "negative_samples", c.embed.negative_samples);
  c.embed.learning_rate = get_number<double>(doc, "learning_rate", c.embed.learning_rate);
  c.embed.seed = get_number<std::uint64_t>(doc, "seed", c.embed.seed);

  c.hdbscan.min_cluster_size = get_number<std::size_t>(doc, "min_cluster_size", c.hdbscan.min_cluster_size);
  c.hdbscan.min_samples = get_number<std::size_t>(doc, "min_samples", c.hdbscan.min_samples);
  if (const auto it = doc.find("allow_single_cluster"); it != doc.end()) {
    if (!it->is_boolean()) throw ValidationError("config 'allow_single_cluster' must be a boolean");
    c.hdbscan.allow_single_cluster = it->get<bool>();
  }
  if (const auto rule = get_string(doc, "threshold_rule")) c.threshold = ThresholdRule::parse(*rule);
  c.stub_vector_dim = get_number<std::size_t>(doc, "stub_vector_dim", c.stub_vector_dim);
  c.grid_resolution = get_number<std::size_t>(doc, "grid_resolution", c.grid_resolution);
  if (const auto it = doc.find("bandwidth"); it != doc.end() && !it->is_null() && *it != "scott") {
    c.bandwidth = get_number<double>(doc, "bandwidth", 1.0);
  }

  if (c.layers.period_end < c.layers.period_start) throw ValidationError("period_end precedes period_start");
  if (c.layers.top_k == 0) throw ValidationError("top_k must be at least 1");
  if (c.graph.n_neighbors == 0) throw ValidationError("n_neighbors must be positive");
  if (c.embed.dim == 0) throw ValidationError("dim must be positive");
  if (c.embed.n_epochs == 0) throw ValidationError("n_epochs must be positive");
  if (c.lambda < 0.0) throw ValidationError("lambda must be non-negative");
  if (!(c.embed.spread > 0.0) || c.embed.min_dist < 0.0) throw ValidationError("invalid min_dist/spread");
  if (c.hdbscan.min_cluster_size < 2) throw ValidationError("min_cluster_size must be at least 2");
  if (c.hdbscan.min_samples == 0) throw ValidationError("min_samples must be positive");
  if (c.stub_vector_dim < 2) throw ValidationError("stub_vector_dim must be at least 2");
  if (c.grid_resolution < 16) throw ValidationError("grid_resolution must be at least 16");
  if (c.bandwidth && !(*c.bandwidth > 0.0)) throw ValidationError("bandwidth must be positive");
  if (c.embed.dim < 2) throw ValidationError("dim must be at least 2 for the 2D projection");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.parent_path());
}

std::string config_json(const PipelineConfig& c) {
  nlohmann::ordered_json doc;
  doc["articles"] = c.articles.filename().string();
  doc["vectors"] = c.vectors ? json(c.vectors->filename().string()) : json(nullptr);
  doc["overrides"] = c.overrides ? json(c.overrides->filename().string()) : json(nullptr);
  doc["period_start"] = c.layers.period_start;
  doc["period_end"] = c.layers.period_end;
  doc["top_k"] = c.layers.top_k;
  doc["base_group"] = c.base_group;
  doc["n_neighbors"] = c.graph.n_neighbors;
  doc["row_transform"] = c.graph.transform == RowTransform::log1p ? "log1p" : "none";
  doc["dim"] = c.embed.dim;
  doc["lambda"] = c.lambda;
  doc["min_dist"] = c.embed.min_dist;
  doc["spread"] = c.embed.spread;
  doc["n_epochs"] = c.embed.n_epochs;
  doc["negative_samples"] = c.embed.negative_samples;
  doc["learning_rate"] = c.embed.learning_rate;
  doc["min_cluster_size"] = c.hdbscan.min_cluster_size;
  doc["min_samples"] = c.hdbscan.min_samples;
  doc["allow_single_cluster"] = c.hdbscan.allow_single_cluster;
  doc["threshold_rule"] = c.threshold.to_string();
  doc["stub_vector_dim"] = c.stub_vector_dim;
  doc["grid_resolution"] = c.grid_resolution;
  doc["bandwidth"] = c.bandwidth ? json(*c.bandwidth) : json("scott");
  doc["seed"] = c.embed.seed;
  return doc.dump(2);
}

}  // namespace tagalign
