#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tagalign/artifacts.hpp"
#include "tagalign/error.hpp"
#include "tagalign/io.hpp"
#include "tagalign/pipeline.hpp"
#include "tagalign/synth.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal, interlingual tag-network embedding pipeline"};
  app.set_version_flag("--version", tagalign::kVersion);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run every stage and write the artifact directory");
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::size_t threads = 1;
  run->add_option("--config", config_path, "JSON configuration file")->required();
  run->add_option("--out", out_dir, "Artifact directory")->required();
  run->add_option("--seed", seed, "Random seed (overrides the config)");
  run->add_flag("--deterministic", deterministic, "Byte-identical output for identical inputs");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* render = app.add_subcommand("render", "Render density figures from a 2D frames CSV");
  std::string frames_path;
  std::string render_out;
  tagalign::RenderOptions render_options;
  render->add_option("--frames", frames_path, "Frames CSV with two coordinates")->required();
  render->add_option("--out", render_out, "Output directory for SVG files")->required();
  render->add_option("--base-group", render_options.base_group, "Group drawn as the background outline");
  render->add_option("--resolution", render_options.grid_resolution, "Grid cells per axis");
  render->add_option("--bandwidth", render_options.bandwidth, "Kernel bandwidth (default: Scott's rule)");
  render->add_option("--threads", render_options.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* metrics = app.add_subcommand("metrics", "Cluster prevalence and cohesion");
  std::string layers_dir;
  std::string clusters_path;
  std::string metrics_out;
  metrics->add_option("--layers", layers_dir, "Layer directory written by run")->required();
  metrics->add_option("--clusters", clusters_path, "Clusters CSV")->required();
  metrics->add_option("--out", metrics_out, "Output CSV (default: stdout)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and a matching config");
  std::string synth_out;
  tagalign::SynthOptions synth_options;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--articles", synth_options.articles_per_layer, "Articles per group and year");
  synth->add_option("--seed", synth_options.seed, "Random seed");
  synth->add_option("--sparse-link-period", synth_options.sparse_link_period,
                    "Year in which non-base groups share only one topic with the base group");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      tagalign::RunOptions options{out_dir, seed, deterministic, threads};
      const auto summary = tagalign::run_pipeline(tagalign::load_config(config_path), options);
      std::cout << "layers " << summary.layers << ", final frames " << summary.final_frames
                << ", affine maps " << summary.affine_maps << ", links " << summary.links << "\n";
      for (const auto& fallback : summary.fallbacks) std::cout << "fallback " << fallback << "\n";
      for (const auto& warning : summary.warnings) std::cerr << "warning: " << warning << "\n";
    } else if (*render) {
      const auto frames = tagalign::parse_frames_csv(tagalign::io::read_file(frames_path));
      const auto files = tagalign::render_frames(frames, render_out, render_options);
      std::cout << "wrote " << files.size() << " figures\n";
    } else if (*metrics) {
      const std::string csv = tagalign::metrics_from_files(layers_dir, clusters_path);
      if (metrics_out.empty()) {
        std::cout << csv;
      } else {
        tagalign::io::write_file(metrics_out, csv);
      }
    } else if (*synth) {
      std::filesystem::create_directories(synth_out);
      const auto articles = tagalign::synthetic_corpus(synth_options);
      tagalign::io::write_file(std::filesystem::path(synth_out) / "articles.jsonl",
                               tagalign::to_jsonl(articles));
      tagalign::io::write_file(std::filesystem::path(synth_out) / "config.json",
                               "{\n  \"articles\": \"articles.jsonl\",\n  \"seed\": " +
                                   std::to_string(synth_options.seed) + "\n}\n");
      std::cout << "wrote " << articles.size() << " articles\n";
    }
  } catch (const tagalign::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const tagalign::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
