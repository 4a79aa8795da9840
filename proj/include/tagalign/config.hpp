#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tagalign/cluster.hpp"
#include "tagalign/embed.hpp"
#include "tagalign/ingest.hpp"
#include "tagalign/link.hpp"

namespace tagalign {

/// Every tunable of a pipeline run. Paths are resolved against the config
/// file's directory.
struct PipelineConfig {
  std::filesystem::path articles;
  std::optional<std::filesystem::path> vectors;    // stub vectors when absent
  std::optional<std::filesystem::path> overrides;
  LayerConfig layers;
  std::string base_group = "en";
  GraphOptions graph;
  EmbedOptions embed;
  double lambda = 0.3;
  HdbscanOptions hdbscan;
  ThresholdRule threshold;
  std::size_t stub_vector_dim = 64;
  std::size_t grid_resolution = 256;
  std::optional<double> bandwidth;  // Scott's rule when absent
};

/// Parses a JSON config document. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Effective parameter values as a JSON object string (paths as given).
std::string config_json(const PipelineConfig& config);

}  // namespace tagalign
