#include "tagalign/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include "json.hpp"
#include "tagalign/artifacts.hpp"
#include "tagalign/error.hpp"
#include "tagalign/graph.hpp"
#include "tagalign/io.hpp"
#include "tagalign/metrics.hpp"
#include "tagalign/project.hpp"
#include "tagalign/report.hpp"
#include "tagalign/simd/kernels.hpp"

namespace tagalign {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Re-raises the active exception with a stage prefix, keeping its type.
[[noreturn]] void rethrow_in(std::string_view stage, const std::string& where) {
  const std::string prefix =
      std::string(stage) + (where.empty() ? std::string{} : " [" + where + "]") + ": ";
  try {
    throw;
  } catch (const UnderdeterminedError& e) {
    throw UnderdeterminedError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw ValidationError(prefix + e.what());
  } catch (const std::bad_alloc&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

template <class F>
auto in_stage(std::string_view stage, const std::string& where, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (...) {
    rethrow_in(stage, where);
  }
}

// Runs body(i) for i in [0, n) on up to `threads` workers. If several
// iterations fail, the error of the lowest index is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

class Clock {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Output directory that is emptied again unless commit() is called.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    if (root_.empty()) throw ValidationError("output directory is required");
    if (fs::exists(root_)) {
      if (!fs::is_directory(root_)) throw ValidationError(root_.string() + " is not a directory");
      if (!fs::is_empty(root_)) {
        if (!fs::exists(root_ / "manifest.json")) {
          throw ValidationError(root_.string() + " is not empty and holds no previous run");
        }
        clear();
      }
    } else {
      fs::create_directories(root_);
      created_ = true;
    }
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    clear(ec);
    if (created_) fs::remove(root_, ec);
  }

  void write(const std::string& relative, std::string_view contents) {
    const fs::path path = root_ / relative;
    fs::create_directories(path.parent_path());
    io::write_file(path, contents);
    add(relative);
  }
  void add(const std::string& relative) { files_.insert(relative); }

  const fs::path& root() const noexcept { return root_; }
  std::vector<std::string> files() const { return {files_.begin(), files_.end()}; }
  void commit() noexcept { committed_ = true; }

 private:
  void clear() {
    for (const auto& entry : fs::directory_iterator(root_)) fs::remove_all(entry.path());
  }
  void clear(std::error_code& ec) noexcept {
    for (auto it = fs::directory_iterator(root_, ec); !ec && it != fs::directory_iterator(); it.increment(ec)) {
      std::error_code ignored;
      fs::remove_all(it->path(), ignored);
    }
  }

  fs::path root_;
  bool created_ = false;
  bool committed_ = false;
  std::set<std::string> files_;
};

struct RenderResult {
  std::vector<std::string> files;
  double bandwidth = 0.0;
  bool bandwidth_from_rule = true;
  BoundingBox bbox;
  std::vector<std::string> warnings;
};

std::string svg_name(const LayerKey& key) { return layer_stem(key) + ".svg"; }

RenderResult render_all(std::span<const EmbeddingFrame> frames, const RenderOptions& options,
                        const std::function<void(const std::string&, const std::string&)>& sink) {
  for (const auto& frame : frames) {
    if (frame.dim() != 2 && frame.coords.rows() > 0) {
      throw ValidationError("frame " + frame.key.to_string() + " is not two-dimensional");
    }
  }
  RenderResult result;
  result.bandwidth_from_rule = !options.bandwidth.has_value();
  result.bandwidth = options.bandwidth ? *options.bandwidth : scott_bandwidth(frames);
  result.bbox = pooled_bbox(frames, 3.0 * result.bandwidth);

  auto grid_of = [&](const EmbeddingFrame& frame) {
    return density_grid(frame.coords, result.bbox, options.grid_resolution, result.bandwidth);
  };
  std::map<int, std::size_t> base_index;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].key.group == options.base_group) base_index[frames[i].key.period] = i;
  }
  std::vector<DensityGrid> grids(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t i) {
    in_stage("report", frames[i].key.to_string(), [&] { grids[i] = grid_of(frames[i]); });
  });
  std::vector<std::string> svgs(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t i) {
    const auto& key = frames[i].key;
    const DensityGrid* outline = nullptr;
    if (key.group != options.base_group) {
      if (const auto it = base_index.find(key.period); it != base_index.end()) outline = &grids[it->second];
    }
    svgs[i] = in_stage("report", key.to_string(),
                       [&] { return render_svg(grids[i], outline, key.to_string()); });
  });
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (grids[i].empty_input) result.warnings.push_back(frames[i].key.to_string() + ": empty frame rendered as zero grid");
    const std::string name = svg_name(frames[i].key);
    sink(name, svgs[i]);
    result.files.push_back(name);
  }
  return result;
}

std::vector<std::string> groups_of(std::span<const Layer> layers, const std::string& base) {
  std::vector<std::string> groups;
  for (const auto& layer : layers) {
    if (std::find(groups.begin(), groups.end(), layer.key.group) == groups.end()) {
      groups.push_back(layer.key.group);
    }
  }
  std::sort(groups.begin(), groups.end(), [&](const std::string& a, const std::string& b) {
    return std::pair{a != base, a} < std::pair{b != base, b};
  });
  return groups;
}

Json bbox_json(const BoundingBox& box) {
  return Json{{"min_x", box.min_x}, {"min_y", box.min_y}, {"max_x", box.max_x}, {"max_y", box.max_y}};
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& input_config, const RunOptions& options) {
  PipelineConfig config = input_config;
  if (options.seed) config.embed.seed = *options.seed;
  const std::size_t threads = std::max<std::size_t>(options.threads, 1);
  config.embed.threads = options.deterministic ? 1 : threads;

  OutputDir out(options.out_dir);
  RunSummary summary;
  Json timings = Json::object();
  Clock clock;

  // ingest
  const std::vector<Layer> layers = in_stage("ingest", config.articles.filename().string(), [&] {
    std::ifstream in(config.articles, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + config.articles.string());
    const auto articles = parse_articles(in);
    return build_layers(articles, config.layers);
  });
  if (layers.empty()) {
    throw ValidationError("ingest: no articles fall inside " + std::to_string(config.layers.period_start) +
                          "-" + std::to_string(config.layers.period_end));
  }
  const auto groups = groups_of(layers, config.base_group);
  if (groups.front() != config.base_group) {
    throw ValidationError("ingest: base group '" + config.base_group + "' has no articles");
  }
  for (const auto& file : write_layers(out.root() / "layers", layers)) out.add("layers/" + file);
  timings["ingest"] = clock.lap_ms();

  // graph
  std::vector<FuzzyGraph> graphs(layers.size());
  parallel_for(layers.size(), threads, [&](std::size_t i) {
    graphs[i] = in_stage("graph", layers[i].key.to_string(), [&] { return layer_graph(layers[i], config.graph); });
  });
  timings["graph"] = clock.lap_ms();

  // embed, one chain per group
  std::vector<std::vector<std::size_t>> chains(groups.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto g = std::find(groups.begin(), groups.end(), layers[i].key.group) - groups.begin();
    chains[static_cast<std::size_t>(g)].push_back(i);
  }
  std::vector<EmbeddingFrame> intermediate(layers.size());
  const std::size_t chain_threads = options.deterministic ? threads : 1;
  parallel_for(groups.size(), chain_threads, [&](std::size_t g) {
    std::vector<Layer> chain_layers;
    std::vector<FuzzyGraph> chain_graphs;
    for (const std::size_t i : chains[g]) {
      chain_layers.push_back(layers[i]);
      chain_graphs.push_back(graphs[i]);
    }
    EmbedOptions chain_options = config.embed;
    chain_options.seed = config.embed.seed * 7919ULL + g;
    auto frames = in_stage("embed", groups[g], [&] {
      return embed_chain(chain_layers, chain_graphs, config.lambda, chain_options);
    });
    for (std::size_t k = 0; k < chains[g].size(); ++k) intermediate[chains[g][k]] = std::move(frames[k]);
  });
  out.write("frames/intermediate.csv", frames_csv(intermediate));
  timings["embed"] = clock.lap_ms();

  // cluster
  std::vector<ClusterAssignment> assignments(layers.size());
  std::vector<std::string> cluster_warnings(layers.size());
  parallel_for(layers.size(), threads, [&](std::size_t i) {
    const auto& key = layers[i].key;
    const std::size_t n = layers[i].size();
    if (n <= config.hdbscan.min_samples || n < config.hdbscan.min_cluster_size) {
      assignments[i] = ClusterAssignment{key, std::vector<int>(n, -1), {}};
      cluster_warnings[i] = key.to_string() + ": too few tags to cluster; all marked noise";
      return;
    }
    assignments[i] = in_stage("cluster", key.to_string(), [&] { return hdbscan(intermediate[i].coords, config.hdbscan); });
    assignments[i].key = key;
  });
  for (const auto& w : cluster_warnings) {
    if (!w.empty()) summary.warnings.push_back(w);
  }
  out.write("clusters.csv", clusters_csv(layers, assignments));
  timings["cluster"] = clock.lap_ms();

  // link
  std::unique_ptr<VectorProvider> provider = in_stage("link", "vectors", [&]() -> std::unique_ptr<VectorProvider> {
    if (config.vectors) return std::make_unique<TableVectors>(load_vectors(*config.vectors));
    return std::make_unique<StubVectors>(config.stub_vector_dim, config.embed.seed);
  });
  std::map<LayerKey, std::size_t> layer_index;
  for (std::size_t i = 0; i < layers.size(); ++i) layer_index[layers[i].key] = i;
  std::set<int> periods;
  for (const auto& layer : layers) periods.insert(layer.key.period);

  std::vector<InterlingualLink> links;
  Json matching = Json::array();
  for (const int period : periods) {
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const auto ia = layer_index.find({groups[a], period});
        const auto ib = layer_index.find({groups[b], period});
        if (ia == layer_index.end() || ib == layer_index.end()) continue;
        const std::string where = groups[a] + "~" + groups[b] + "/" + std::to_string(period);
        in_stage("link", where, [&] {
          const auto& la = layers[ia->second];
          const auto& lb = layers[ib->second];
          const auto& aa = assignments[ia->second];
          const auto& ab = assignments[ib->second];
          const auto result = match_clusters(aa, ab, la, lb, *provider, config.threshold);
          auto derived = derive_links(result.matches, aa, ab, la, lb, *provider);
          matching.push_back(Json{{"pair", where},
                                  {"threshold", result.threshold},
                                  {"matches", result.matches.size()},
                                  {"links", derived.size()}});
          links.insert(links.end(), std::make_move_iterator(derived.begin()), std::make_move_iterator(derived.end()));
        });
      }
    }
  }
  if (config.overrides) {
    links = in_stage("link", config.overrides->filename().string(), [&] {
      std::ifstream in(*config.overrides, std::ios::binary);
      if (!in) throw ValidationError("cannot open " + config.overrides->string());
      const auto rows = parse_overrides(in);
      return apply_overrides(std::move(links), rows, layers);
    });
  }
  in_stage("link", "integrity", [&] { check_link_integrity(links, layers); });
  out.write("links.csv", links_csv(links));
  summary.links = links.size();
  timings["link"] = clock.lap_ms();

  // align every non-base group onto the base group, period by period
  std::vector<EmbeddingFrame> aligned(layers.size());
  std::vector<AffineMap> maps;
  Json fallbacks = Json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& key = layers[i].key;
    if (key.group == config.base_group) {
      aligned[i] = as_aligned(intermediate[i]);
      continue;
    }
    in_stage("align", key.to_string(), [&] {
      const auto base = layer_index.find({config.base_group, key.period});
      std::vector<std::pair<std::size_t, std::size_t>> anchors;  // (node in group, node in base)
      if (base != layer_index.end()) {
        const Layer& base_layer = layers[base->second];
        for (const auto& link : links) {
          if (link.period != key.period) continue;
          std::optional<std::size_t> own;
          std::optional<std::size_t> ref;
          if (link.group_a == key.group && link.group_b == config.base_group) {
            own = layers[i].vocab.index_of(link.tag_a);
            ref = base_layer.vocab.index_of(link.tag_b);
          } else if (link.group_b == key.group && link.group_a == config.base_group) {
            own = layers[i].vocab.index_of(link.tag_b);
            ref = base_layer.vocab.index_of(link.tag_a);
          }
          if (own && ref) anchors.emplace_back(*own, *ref);
        }
      }
      const std::size_t dim = config.embed.dim;
      RealMatrix anchors_a(anchors.size(), dim);
      RealMatrix anchors_b(anchors.size(), dim);
      for (std::size_t r = 0; r < anchors.size(); ++r) {
        for (std::size_t d = 0; d < dim; ++d) {
          anchors_a(r, d) = intermediate[i].coords(anchors[r].first, d);
          anchors_b(r, d) = intermediate[base->second].coords(anchors[r].second, d);
        }
      }
      AffineMap map = fit_alignment(anchors_a, anchors_b);
      map.group = key.group;
      map.period = key.period;
      map.base_group = config.base_group;
      map.anchor_count = anchors.size();
      if (map.kind != AffineMap::Kind::affine) {
        const std::string reason = base == layer_index.end() ? "base group has no layer in this period"
                                   : anchors.empty()        ? "no interlingual links"
                                                            : "too few interlingual links for a full affine map";
        fallbacks.push_back(Json{{"stage", "align"},
                                 {"layer", key.to_string()},
                                 {"kind", std::string(to_string(map.kind))},
                                 {"anchors", anchors.size()},
                                 {"reason", reason}});
        summary.fallbacks.push_back(key.to_string() + ": " + std::string(to_string(map.kind)));
        if (map.kind == AffineMap::Kind::identity) {
          summary.warnings.push_back(key.to_string() + ": identity alignment (" + reason + ")");
        }
      }
      aligned[i] = apply_affine(intermediate[i], map);
      maps.push_back(std::move(map));
    });
  }
  out.write("frames/aligned.csv", frames_csv(aligned));
  out.write("affine_maps.csv", affine_csv(maps));
  summary.affine_maps = maps.size();
  timings["align"] = clock.lap_ms();

  // project
  const PcaModel pca = in_stage("project", "pooled", [&] { return fit_pca(std::span<const EmbeddingFrame>(aligned), 2); });
  std::vector<EmbeddingFrame> final_frames;
  for (const auto& frame : aligned) final_frames.push_back(project_pca(frame, pca));
  out.write("frames/final.csv", frames_csv(final_frames));
  timings["project"] = clock.lap_ms();

  // metrics
  std::vector<ClusterMetricRow> metric_rows;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto rows = in_stage("metrics", layers[i].key.to_string(), [&] { return cluster_metrics(layers[i], assignments[i]); });
    metric_rows.insert(metric_rows.end(), rows.begin(), rows.end());
  }
  std::vector<StabilityRow> stability_rows;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (chains[g].size() < 2) continue;
    std::vector<EmbeddingFrame> chain;
    for (const std::size_t i : chains[g]) chain.push_back(intermediate[i]);
    auto rows = in_stage("metrics", groups[g], [&] { return chain_stability(chain); });
    stability_rows.insert(stability_rows.end(), rows.begin(), rows.end());
  }
  out.write("metrics.csv", metrics_csv(metric_rows));
  out.write("stability.csv", stability_csv(stability_rows));
  timings["metrics"] = clock.lap_ms();

  // report
  RenderOptions render_options{config.base_group, config.grid_resolution, config.bandwidth, threads};
  const RenderResult rendered = render_all(final_frames, render_options, [&](const std::string& name, const std::string& svg) {
    out.write("figures/" + name, svg);
  });
  summary.warnings.insert(summary.warnings.end(), rendered.warnings.begin(), rendered.warnings.end());
  timings["report"] = clock.lap_ms();

  // manifest
  summary.layers = layers.size();
  summary.intermediate_frames = intermediate.size();
  summary.final_frames = final_frames.size();

  Json manifest;
  manifest["tool"] = "tagalign";
  manifest["version"] = kVersion;
  manifest["config"] = Json::parse(config_json(config));
  manifest["seed"] = config.embed.seed;
  manifest["deterministic"] = options.deterministic;
  manifest["threads"] = threads;
  manifest["simd"] = std::string(simd::to_string(simd::active().level));
  manifest["groups"] = groups;
  manifest["counts"] = Json{{"layers", layers.size()},
                            {"intermediate_frames", intermediate.size()},
                            {"aligned_frames", aligned.size()},
                            {"final_frames", final_frames.size()},
                            {"clusters", metric_rows.size()},
                            {"links", links.size()},
                            {"affine_maps", maps.size()}};
  Json layer_list = Json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto noise = std::count(assignments[i].labels.begin(), assignments[i].labels.end(), -1);
    layer_list.push_back(Json{{"layer", layers[i].key.to_string()},
                              {"articles", layers[i].article_total},
                              {"tags", layers[i].size()},
                              {"clusters", assignments[i].cluster_count()},
                              {"noise", noise},
                              {"figure", "figures/" + svg_name(layers[i].key)}});
  }
  manifest["layers"] = std::move(layer_list);
  manifest["frames"] = Json{{"intermediate", "frames/intermediate.csv"},
                            {"aligned", "frames/aligned.csv"},
                            {"final", "frames/final.csv"}};
  manifest["matching"] = std::move(matching);
  Json map_list = Json::array();
  for (const auto& map : maps) {
    map_list.push_back(Json{{"group", map.group},
                            {"period", map.period},
                            {"base_group", map.base_group},
                            {"kind", std::string(to_string(map.kind))},
                            {"anchors", map.anchor_count}});
  }
  manifest["affine_maps"] = std::move(map_list);
  manifest["fallbacks"] = std::move(fallbacks);
  manifest["warnings"] = summary.warnings;
  manifest["pca"] = Json{{"components", pca.out_dim()},
                         {"explained_variance", pca.explained_variance},
                         {"total_variance", pca.total_variance},
                         {"explained_share", pca.explained_share()}};
  manifest["kde"] = Json{{"kernel", "isotropic gaussian"},
                         {"bandwidth", rendered.bandwidth},
                         {"bandwidth_rule", rendered.bandwidth_from_rule ? "scott (pooled final coordinates)" : "configured"},
                         {"grid_resolution", config.grid_resolution},
                         {"bbox", bbox_json(rendered.bbox)},
                         {"band_mass_fractions", band_mass_fractions()},
                         {"outline_mass", kOutlineMass},
                         {"note", "KDE parameters and contour levels are chosen defaults, not published values"}};
  manifest["log_base"] = "natural";

  out.add("manifest.json");
  summary.artifacts = out.files();
  manifest["artifacts"] = summary.artifacts;
  if (!options.deterministic) {
    timings["total"] = 0.0;
    double total = 0.0;
    for (const auto& [stage, ms] : timings.items()) {
      if (stage != "total") total += ms.get<double>();
    }
    timings["total"] = total;
    manifest["timings_ms"] = std::move(timings);
  }
  io::write_file(out.root() / "manifest.json", manifest.dump(2) + "\n");
  out.commit();
  return summary;
}

std::vector<std::string> render_frames(std::span<const EmbeddingFrame> frames, const fs::path& out_dir,
                                       const RenderOptions& options) {
  fs::create_directories(out_dir);
  const auto result = render_all(frames, options, [&](const std::string& name, const std::string& svg) {
    io::write_file(out_dir / name, svg);
  });
  return result.files;
}

std::string metrics_from_files(const fs::path& layers_dir, const fs::path& clusters_csv_path) {
  const auto layers = in_stage("metrics", layers_dir.string(), [&] { return read_layers(layers_dir); });
  const auto assignments = in_stage("metrics", clusters_csv_path.filename().string(), [&] {
    return parse_clusters_csv(io::read_file(clusters_csv_path), layers);
  });
  std::vector<ClusterMetricRow> rows;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto layer_rows = in_stage("metrics", layers[i].key.to_string(), [&] { return cluster_metrics(layers[i], assignments[i]); });
    rows.insert(rows.end(), layer_rows.begin(), layer_rows.end());
  }
  return metrics_csv(rows);
}

}  // namespace tagalign
