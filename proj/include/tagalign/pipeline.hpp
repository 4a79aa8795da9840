#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagalign/config.hpp"
#include "tagalign/types.hpp"

namespace tagalign {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool deterministic = false;         // single-threaded embedding, no timings in the manifest
  std::size_t threads = 1;
};

struct RunSummary {
  std::size_t layers = 0;
  std::size_t intermediate_frames = 0;
  std::size_t final_frames = 0;
  std::size_t affine_maps = 0;
  std::size_t links = 0;
  std::vector<std::string> fallbacks;  // "group/period: kind"
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;  // relative to out_dir, sorted
};

/// Runs every stage and writes the artifact directory. Errors name the stage
/// and layer; on failure the directory is left empty.
RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options);

struct RenderOptions {
  std::string base_group = "en";
  std::size_t grid_resolution = 256;
  std::optional<double> bandwidth;
  std::size_t threads = 1;
};

/// Renders one SVG per 2D frame into `out_dir`; returns the file names.
std::vector<std::string> render_frames(std::span<const EmbeddingFrame> frames,
                                       const std::filesystem::path& out_dir,
                                       const RenderOptions& options);

/// Cluster metrics CSV for a layer directory and a clusters CSV.
std::string metrics_from_files(const std::filesystem::path& layers_dir,
                               const std::filesystem::path& clusters_csv_path);

}  // namespace tagalign
