#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  double width() const noexcept { return max_x - min_x; }
  double height() const noexcept { return max_y - min_y; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Scott's rule on the pooled 2D coordinates: sigma * n^(-1/6), sigma the
/// root mean of the two per-axis sample variances. Falls back to 1 for
/// degenerate input.
double scott_bandwidth(std::span<const EmbeddingFrame> frames);

/// Pooled extent of all frames, padded by `padding` on every side.
BoundingBox pooled_bbox(std::span<const EmbeddingFrame> frames, double padding);

/// Gaussian kernel density sampled at R x R cell centers, normalized to sum 1.
/// Cells are stored row-major with row index along y.
struct DensityGrid {
  BoundingBox bbox;
  std::size_t resolution = 0;
  double bandwidth = 1.0;
  std::vector<double> density;
  bool empty_input = false;  // no points; all densities are zero

  double at(std::size_t ix, std::size_t iy) const { return density[iy * resolution + ix]; }
  std::pair<double, double> cell_center(std::size_t ix, std::size_t iy) const;
  bool all_zero() const;
};

/// Requires R >= 16, h > 0, and a 2-column frame.
DensityGrid density_grid(const RealMatrix& points, const BoundingBox& bbox, std::size_t resolution,
                         double bandwidth);

/// Density thresholds whose superlevel sets hold the given probability mass
/// (highest-density regions). Returned in the order of `mass_fractions`.
std::vector<double> mass_levels(const DensityGrid& grid, std::span<const double> mass_fractions);

/// Mass fractions of the ten contour bands, widest first (0.95 ... 0.05).
std::vector<double> band_mass_fractions();

/// Mass enclosed by the base-group silhouette.
inline constexpr double kOutlineMass = 0.95;

/// Closed polygon in data coordinates; the first point is not repeated.
using Ring = std::vector<std::pair<double, double>>;

/// Marching-squares isolines of the grid at `level` (> 0). The grid is
/// treated as zero outside its extent, so every ring is closed.
std::vector<Ring> contour_rings(const DensityGrid& grid, double level);

/// Filled contour bands, optionally over a gray silhouette of `base_outline`.
/// Output is byte-identical for identical inputs.
std::string render_svg(const DensityGrid& grid, const DensityGrid* base_outline = nullptr,
                       std::string_view title = {});

}  // namespace tagalign
