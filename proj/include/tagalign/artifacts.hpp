#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/cluster.hpp"
#include "tagalign/types.hpp"

namespace tagalign {

/// `group,period,tag,x1..xD,space`, one row per tag.
std::string frames_csv(std::span<const EmbeddingFrame> frames);
std::vector<EmbeddingFrame> parse_frames_csv(std::string_view text);

/// `group,period,tag,cluster_label,cluster_stability`; noise rows leave the
/// stability empty.
std::string clusters_csv(std::span<const Layer> layers, std::span<const ClusterAssignment> assignments);

/// Rebuilds assignments for `layers` (same order) from a clusters CSV.
std::vector<ClusterAssignment> parse_clusters_csv(std::string_view text, std::span<const Layer> layers);

/// File-system safe stem for a layer, e.g. `de_2019`.
std::string layer_stem(const LayerKey& key);

/// Relative paths of the files written by write_layers.
std::vector<std::string> write_layers(const std::filesystem::path& dir, std::span<const Layer> layers);

/// Reads a directory produced by write_layers.
std::vector<Layer> read_layers(const std::filesystem::path& dir);

}  // namespace tagalign
