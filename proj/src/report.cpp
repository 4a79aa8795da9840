#include "tagalign/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "tagalign/error.hpp"
#include "tagalign/simd/kernels.hpp"

namespace tagalign {
namespace {

constexpr double kCanvas = 480.0;
constexpr double kMargin = 40.0;
constexpr double kPlot = kCanvas - 2.0 * kMargin;

constexpr std::array<const char*, 10> kBandColors = {
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
    "#4292c6", "#2171b5", "#08519c", "#08306b", "#041c40"};

std::string fixed2(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  std::string s(buffer);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string short_real(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.3g", v);
  return buffer;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string rings_path(const std::vector<Ring>& rings, const BoundingBox& box) {
  std::string d;
  for (const auto& ring : rings) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const double sx = kMargin + (ring[i].first - box.min_x) / box.width() * kPlot;
      const double sy = kMargin + kPlot - (ring[i].second - box.min_y) / box.height() * kPlot;
      d += (i == 0 ? "M" : "L") + fixed2(sx) + " " + fixed2(sy);
    }
    d += "Z";
  }
  return d;
}

}  // namespace

double scott_bandwidth(std::span<const EmbeddingFrame> frames) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& f : frames) {
    if (f.coords.rows() > 0 && f.dim() != 2) throw ValidationError("bandwidth needs 2D frames");
    for (std::size_t i = 0; i < f.coords.rows(); ++i) {
      xs.push_back(f.coords(i, 0));
      ys.push_back(f.coords(i, 1));
    }
  }
  const std::size_t n = xs.size();
  if (n < 2) return 1.0;
  const auto variance = [n](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(n - 1);
  };
  const double sigma = std::sqrt((variance(xs) + variance(ys)) / 2.0);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) return 1.0;
  return sigma * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

BoundingBox pooled_bbox(std::span<const EmbeddingFrame> frames, double padding) {
  BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < f.coords.rows(); ++i) {
      box.min_x = std::min(box.min_x, f.coords(i, 0));
      box.max_x = std::max(box.max_x, f.coords(i, 0));
      box.min_y = std::min(box.min_y, f.coords(i, 1));
      box.max_y = std::max(box.max_y, f.coords(i, 1));
      any = true;
    }
  }
  if (!any) return BoundingBox{};
  box.min_x -= padding;
  box.min_y -= padding;
  box.max_x += padding;
  box.max_y += padding;
  if (!(box.width() > 0.0)) {
    box.min_x -= 1.0;
    box.max_x += 1.0;
  }
  if (!(box.height() > 0.0)) {
    box.min_y -= 1.0;
    box.max_y += 1.0;
  }
  return box;
}

std::pair<double, double> DensityGrid::cell_center(std::size_t ix, std::size_t iy) const {
  const double r = static_cast<double>(resolution);
  return {bbox.min_x + (static_cast<double>(ix) + 0.5) * bbox.width() / r,
          bbox.min_y + (static_cast<double>(iy) + 0.5) * bbox.height() / r};
}

bool DensityGrid::all_zero() const {
  return std::all_of(density.begin(), density.end(), [](double v) { return v == 0.0; });
}

DensityGrid density_grid(const RealMatrix& points, const BoundingBox& bbox, std::size_t resolution,
                         double bandwidth) {
  if (resolution < 16) throw ValidationError("grid resolution must be at least 16");
  if (!(bandwidth > 0.0)) throw ValidationError("bandwidth must be positive");
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) {
    throw ValidationError("bounding box must have positive extent");
  }
  if (points.rows() > 0 && points.cols() != 2) throw ValidationError("density needs 2D points");

  DensityGrid grid;
  grid.bbox = bbox;
  grid.resolution = resolution;
  grid.bandwidth = bandwidth;
  grid.density.assign(resolution * resolution, 0.0);
  if (points.rows() == 0) {
    grid.empty_input = true;
    return grid;
  }

  std::vector<double> xs(points.rows());
  std::vector<double> ys(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    xs[i] = points(i, 0);
    ys[i] = points(i, 1);
  }
  const double scale = -1.0 / (2.0 * bandwidth * bandwidth);
  const auto& k = simd::active();
  double total = 0.0;
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const auto [cx, cy] = grid.cell_center(ix, iy);
      const double v = k.gaussian_sum(xs.data(), ys.data(), xs.size(), cx, cy, scale);
      grid.density[iy * resolution + ix] = v;
      total += v;
    }
  }
  if (total > 0.0) {
    for (double& v : grid.density) v /= total;
  }
  return grid;
}

std::vector<double> band_mass_fractions() {
  std::vector<double> fractions;
  for (int i = 0; i < 10; ++i) fractions.push_back(0.95 - 0.1 * i);
  return fractions;
}

std::vector<double> mass_levels(const DensityGrid& grid, std::span<const double> mass_fractions) {
  std::vector<double> sorted = grid.density;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  std::vector<double> levels;
  for (const double fraction : mass_fractions) {
    double level = 0.0;
    if (total > 0.0) {
      double cumulative = 0.0;
      level = sorted.back();
      for (const double v : sorted) {
        cumulative += v;
        if (cumulative >= fraction * total) {
          level = v;
          break;
        }
      }
    }
    levels.push_back(level);
  }
  return levels;
}

std::vector<Ring> contour_rings(const DensityGrid& grid, double level) {
  if (!(level > 0.0)) throw ValidationError("contour level must be positive");
  const std::size_t r = grid.resolution;
  const std::size_t w = r + 2;  // zero border
  const auto value = [&](std::size_t px, std::size_t py) {
    if (px == 0 || py == 0 || px > r || py > r) return 0.0;
    return grid.at(px - 1, py - 1);
  };
  const auto vertex_position = [&](double px, double py) {
    const double cw = grid.bbox.width() / static_cast<double>(r);
    const double ch = grid.bbox.height() / static_cast<double>(r);
    return std::pair{grid.bbox.min_x + (px - 0.5) * cw, grid.bbox.min_y + (py - 0.5) * ch};
  };
  // Edge ids: horizontal edge from (px,py) to (px+1,py) -> 2*(py*w+px);
  // vertical edge from (px,py) to (px,py+1) -> 2*(py*w+px)+1.
  const auto edge_id = [&](std::size_t px, std::size_t py, bool vertical) {
    return 2 * (py * w + px) + (vertical ? 1 : 0);
  };
  std::map<std::size_t, std::pair<double, double>> points;
  std::map<std::size_t, std::vector<std::size_t>> adjacency;

  const auto crossing = [&](std::size_t px, std::size_t py, int edge) {
    std::size_t ax = px, ay = py, bx = px + 1, by = py;
    bool vertical = false;
    switch (edge) {
      case 0: break;                                      // bottom
      case 1: ax = px + 1; bx = px + 1; by = py + 1; vertical = true; break;  // right
      case 2: ay = py + 1; by = py + 1; break;            // top
      case 3: bx = px; by = py + 1; vertical = true; break;  // left
    }
    const std::size_t id = edge_id(ax, ay, vertical);
    if (!points.contains(id)) {
      const double fa = value(ax, ay);
      const double fb = value(bx, by);
      const double t = (level - fa) / (fb - fa);
      const auto pa = vertex_position(static_cast<double>(ax), static_cast<double>(ay));
      const auto pb = vertex_position(static_cast<double>(bx), static_cast<double>(by));
      points[id] = {pa.first + t * (pb.first - pa.first), pa.second + t * (pb.second - pa.second)};
    }
    return id;
  };
  const auto segment = [&](std::size_t px, std::size_t py, int e1, int e2) {
    const std::size_t a = crossing(px, py, e1);
    const std::size_t b = crossing(px, py, e2);
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  };

  for (std::size_t py = 0; py + 1 < w; ++py) {
    for (std::size_t px = 0; px + 1 < w; ++px) {
      const double bl = value(px, py);
      const double br = value(px + 1, py);
      const double tr = value(px + 1, py + 1);
      const double tl = value(px, py + 1);
      const int mask = (bl >= level ? 1 : 0) | (br >= level ? 2 : 0) | (tr >= level ? 4 : 0) |
                       (tl >= level ? 8 : 0);
      const bool center_inside = (bl + br + tr + tl) / 4.0 >= level;
      switch (mask) {
        case 1: case 14: segment(px, py, 3, 0); break;
        case 2: case 13: segment(px, py, 0, 1); break;
        case 3: case 12: segment(px, py, 3, 1); break;
        case 4: case 11: segment(px, py, 1, 2); break;
        case 6: case 9: segment(px, py, 0, 2); break;
        case 7: case 8: segment(px, py, 3, 2); break;
        case 5:
          if (center_inside) { segment(px, py, 0, 1); segment(px, py, 2, 3); }
          else { segment(px, py, 3, 0); segment(px, py, 1, 2); }
          break;
        case 10:
          if (center_inside) { segment(px, py, 3, 0); segment(px, py, 1, 2); }
          else { segment(px, py, 0, 1); segment(px, py, 2, 3); }
          break;
        default: break;
      }
    }
  }

  std::vector<Ring> rings;
  std::map<std::size_t, bool> visited;
  for (const auto& [start, neighbors] : adjacency) {
    if (visited[start]) continue;
    // Every crossing has exactly two neighbors, so each walk closes.
    Ring ring;
    std::size_t previous = start;
    std::size_t current = start;
    do {
      visited[current] = true;
      ring.push_back(points.at(current));
      const auto& options = adjacency.at(current);
      const std::size_t next = options[0] != previous ? options[0] : options[1];
      previous = current;
      current = next;
    } while (current != start && !visited[current]);
    rings.push_back(std::move(ring));
  }
  return rings;
}

std::string render_svg(const DensityGrid& grid, const DensityGrid* base_outline,
                       std::string_view title) {
  const BoundingBox& box = grid.bbox;
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"#ffffff\"/>\n";
  svg += "<rect x=\"40.00\" y=\"40.00\" width=\"400.00\" height=\"400.00\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  if (base_outline != nullptr && !base_outline->all_zero()) {
    const std::array<double, 1> mass{kOutlineMass};
    const double level = mass_levels(*base_outline, mass)[0];
    if (level > 0.0) {
      svg += "<path class=\"outline\" fill=\"#d9d9d9\" fill-rule=\"evenodd\" stroke=\"none\" d=\"" +
             rings_path(contour_rings(*base_outline, level), base_outline->bbox) + "\"/>\n";
    }
  }

  if (!grid.all_zero()) {
    const std::vector<double> fractions = band_mass_fractions();
    const std::vector<double> levels = mass_levels(grid, fractions);
    for (std::size_t b = 0; b < levels.size(); ++b) {
      if (!(levels[b] > 0.0)) continue;
      const auto rings = contour_rings(grid, levels[b]);
      if (rings.empty()) continue;
      svg += "<path class=\"band\" data-level=\"" + std::to_string(b) + "\" fill=\"" +
             kBandColors[b] + "\" fill-opacity=\"0.85\" fill-rule=\"evenodd\" stroke=\"none\" d=\"" +
             rings_path(rings, box) + "\"/>\n";
    }
  }

  // Axes with extent labels.
  svg += "<line x1=\"40.00\" y1=\"440.00\" x2=\"440.00\" y2=\"440.00\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"40.00\" y1=\"40.00\" x2=\"40.00\" y2=\"440.00\" stroke=\"#333333\"/>\n";
  svg += "<text x=\"40.00\" y=\"456.00\" font-size=\"10\" text-anchor=\"start\">" +
         short_real(box.min_x) + "</text>\n";
  svg += "<text x=\"440.00\" y=\"456.00\" font-size=\"10\" text-anchor=\"end\">" +
         short_real(box.max_x) + "</text>\n";
  svg += "<text x=\"36.00\" y=\"440.00\" font-size=\"10\" text-anchor=\"end\">" +
         short_real(box.min_y) + "</text>\n";
  svg += "<text x=\"36.00\" y=\"48.00\" font-size=\"10\" text-anchor=\"end\">" +
         short_real(box.max_y) + "</text>\n";
  if (!title.empty()) {
    svg += "<text x=\"240.00\" y=\"24.00\" font-size=\"14\" text-anchor=\"middle\">" +
           xml_escape(title) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace tagalign
