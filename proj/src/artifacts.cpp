#include "tagalign/artifacts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "tagalign/error.hpp"
#include "tagalign/io.hpp"

namespace tagalign {
namespace {

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!io::trim(line).empty()) lines.push_back(std::move(line));
  }
  return lines;
}

Space parse_space(const std::string& text) {
  if (text == "intermediate") return Space::intermediate;
  if (text == "aligned") return Space::aligned;
  if (text == "final") return Space::final;
  throw ValidationError("unknown space '" + text + "'");
}

}  // namespace

std::string frames_csv(std::span<const EmbeddingFrame> frames) {
  std::size_t dim = 0;
  for (const auto& f : frames) dim = std::max(dim, f.dim());
  std::string out = "group,period,tag";
  for (std::size_t d = 1; d <= dim; ++d) out += ",x" + std::to_string(d);
  out += ",space\n";
  for (const auto& f : frames) {
    if (f.coords.rows() > 0 && f.dim() != dim) throw ValidationError("frames differ in dimension");
    for (std::size_t i = 0; i < f.tags.size(); ++i) {
      std::vector<std::string> fields{io::csv_escape(f.key.group), std::to_string(f.key.period),
                                      io::csv_escape(f.tags[i])};
      for (std::size_t d = 0; d < dim; ++d) fields.push_back(io::format_real(f.coords(i, d)));
      fields.emplace_back(to_string(f.space));
      out += io::csv_line(fields);
      out += '\n';
    }
  }
  return out;
}

std::vector<EmbeddingFrame> parse_frames_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError("frames CSV is empty");
  const auto header = io::csv_split(lines[0]);
  if (header.size() < 5 || header[0] != "group" || header[1] != "period" || header[2] != "tag" ||
      header.back() != "space") {
    throw ValidationError("frames CSV header must be group,period,tag,x1..xD,space");
  }
  const std::size_t dim = header.size() - 4;

  std::map<std::pair<LayerKey, Space>, std::pair<std::vector<std::string>, std::vector<double>>> rows;
  std::vector<std::pair<LayerKey, Space>> order;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto fields = io::csv_split(lines[l]);
    const std::string where = "frames CSV line " + std::to_string(l + 1);
    if (fields.size() != header.size()) throw ValidationError(where + ": wrong field count");
    const LayerKey key{fields[0], static_cast<int>(io::parse_integer(fields[1], where))};
    const std::pair id{key, parse_space(fields.back())};
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.first.push_back(fields[2]);
    for (std::size_t d = 0; d < dim; ++d) it->second.second.push_back(io::parse_real(fields[3 + d], where));
  }

  std::vector<EmbeddingFrame> frames;
  for (const auto& id : order) {
    auto& [tags, values] = rows.at(id);
    EmbeddingFrame f{id.first, id.second, tags, RealMatrix(tags.size(), dim)};
    std::copy(values.begin(), values.end(), f.coords.data());
    frames.push_back(std::move(f));
  }
  return frames;
}

std::string clusters_csv(std::span<const Layer> layers, std::span<const ClusterAssignment> assignments) {
  if (layers.size() != assignments.size()) throw ValidationError("one assignment per layer is required");
  std::string out = "group,period,tag,cluster_label,cluster_stability\n";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& assign = assignments[l];
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const int label = assign.labels.at(i);
      out += io::csv_line({io::csv_escape(layer.key.group), std::to_string(layer.key.period),
                           io::csv_escape(layer.vocab.tags[i]), std::to_string(label),
                           label >= 0 ? io::format_real(assign.stabilities.at(static_cast<std::size_t>(label)))
                                      : std::string{}});
      out += '\n';
    }
  }
  return out;
}

std::vector<ClusterAssignment> parse_clusters_csv(std::string_view text, std::span<const Layer> layers) {
  const auto lines = lines_of(text);
  if (lines.empty() || io::csv_split(lines[0]) !=
                           std::vector<std::string>{"group", "period", "tag", "cluster_label",
                                                    "cluster_stability"}) {
    throw ValidationError("clusters CSV header must be group,period,tag,cluster_label,cluster_stability");
  }
  std::map<LayerKey, std::size_t> index;
  std::vector<ClusterAssignment> out(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    index[layers[l].key] = l;
    out[l].key = layers[l].key;
    out[l].labels.assign(layers[l].size(), -1);
  }
  std::vector<std::vector<bool>> seen(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) seen[l].assign(layers[l].size(), false);

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = io::csv_split(lines[r]);
    const std::string where = "clusters CSV line " + std::to_string(r + 1);
    if (fields.size() != 5) throw ValidationError(where + ": expected 5 fields");
    const LayerKey key{fields[0], static_cast<int>(io::parse_integer(fields[1], where))};
    const auto it = index.find(key);
    if (it == index.end()) throw ValidationError(where + ": no layer " + key.to_string());
    const Layer& layer = layers[it->second];
    const auto node = layer.vocab.index_of(fields[2]);
    if (!node) throw ValidationError(where + ": tag '" + fields[2] + "' not in " + key.to_string());
    const auto label = static_cast<int>(io::parse_integer(fields[3], where));
    auto& assign = out[it->second];
    assign.labels[*node] = label;
    seen[it->second][*node] = true;
    if (label >= 0) {
      const auto slot = static_cast<std::size_t>(label);
      if (assign.stabilities.size() <= slot) assign.stabilities.resize(slot + 1, 0.0);
      assign.stabilities[slot] = io::parse_real(fields[4], where);
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (std::find(seen[l].begin(), seen[l].end(), false) != seen[l].end()) {
      throw ValidationError("clusters CSV does not cover every tag of " + layers[l].key.to_string());
    }
  }
  return out;
}

std::string layer_stem(const LayerKey& key) {
  std::string stem;
  for (const unsigned char c : key.group) {
    if (std::isalnum(c) || c == '-') {
      stem += static_cast<char>(c);
    } else {
      char buffer[4];
      std::snprintf(buffer, sizeof buffer, "%02x", c);
      stem += '_';
      stem += buffer;
    }
  }
  return stem + "_" + std::to_string(key.period);
}

std::vector<std::string> write_layers(const std::filesystem::path& dir, std::span<const Layer> layers) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  std::string index = "group,period,article_total,vocab_size,stem\n";
  for (const auto& layer : layers) {
    const std::string stem = layer_stem(layer.key);
    index += io::csv_line({io::csv_escape(layer.key.group), std::to_string(layer.key.period),
                           std::to_string(layer.article_total), std::to_string(layer.size()), stem});
    index += '\n';

    std::string vocab = "tag,article_count\n";
    for (std::size_t i = 0; i < layer.size(); ++i) {
      vocab += io::csv_line({io::csv_escape(layer.vocab.tags[i]), std::to_string(layer.vocab.usage_counts[i])});
      vocab += '\n';
    }
    io::write_file(dir / (stem + "_vocab.csv"), vocab);
    io::write_file(dir / (stem + "_cooc.csv"), [&] {
      std::string out = "tag_i,tag_j,weight\n";
      for (std::size_t i = 0; i < layer.size(); ++i) {
        for (std::size_t j = i + 1; j < layer.size(); ++j) {
          if (layer.cooc(i, j) == 0) continue;
          out += io::csv_line({io::csv_escape(layer.vocab.tags[i]), io::csv_escape(layer.vocab.tags[j]),
                               std::to_string(layer.cooc(i, j))});
          out += '\n';
        }
      }
      return out;
    }());
    written.push_back(stem + "_vocab.csv");
    written.push_back(stem + "_cooc.csv");
  }
  io::write_file(dir / "index.csv", index);
  written.insert(written.begin(), "index.csv");
  return written;
}

std::vector<Layer> read_layers(const std::filesystem::path& dir) {
  const auto index_lines = lines_of(io::read_file(dir / "index.csv"));
  if (index_lines.empty()) throw ValidationError("layer index is empty");
  std::vector<Layer> layers;
  for (std::size_t r = 1; r < index_lines.size(); ++r) {
    const auto fields = io::csv_split(index_lines[r]);
    const std::string where = "layer index line " + std::to_string(r + 1);
    if (fields.size() != 5) throw ValidationError(where + ": expected 5 fields");
    Layer layer;
    layer.key = {fields[0], static_cast<int>(io::parse_integer(fields[1], where))};
    layer.article_total = io::parse_integer(fields[2], where);
    const std::string stem = fields[4];

    const auto vocab_lines = lines_of(io::read_file(dir / (stem + "_vocab.csv")));
    for (std::size_t v = 1; v < vocab_lines.size(); ++v) {
      const auto vf = io::csv_split(vocab_lines[v]);
      if (vf.size() != 2) throw ValidationError(stem + "_vocab.csv: expected 2 fields");
      layer.vocab.tags.push_back(vf[0]);
      layer.vocab.usage_counts.push_back(io::parse_integer(vf[1], stem + "_vocab.csv"));
    }
    layer.cooc = CountMatrix(layer.size(), layer.size(), 0);
    const auto cooc_lines = lines_of(io::read_file(dir / (stem + "_cooc.csv")));
    for (std::size_t c = 1; c < cooc_lines.size(); ++c) {
      const auto cf = io::csv_split(cooc_lines[c]);
      if (cf.size() != 3) throw ValidationError(stem + "_cooc.csv: expected 3 fields");
      const auto i = layer.vocab.index_of(cf[0]);
      const auto j = layer.vocab.index_of(cf[1]);
      if (!i || !j) throw ValidationError(stem + "_cooc.csv: unknown tag");
      const long long w = io::parse_integer(cf[2], stem + "_cooc.csv");
      layer.cooc(*i, *j) = w;
      layer.cooc(*j, *i) = w;
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace tagalign
