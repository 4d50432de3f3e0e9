#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gatedgan/checkpoint.hpp"
#include "gatedgan/config.hpp"
#include "gatedgan/dataset.hpp"
#include "gatedgan/evaluation.hpp"
#include "gatedgan/image_io.hpp"

namespace fs = std::filesystem;
using namespace gatedgan;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string out_path(const std::string& dir, const std::string& stem) {
  return (fs::path(dir) / (stem + ".png")).string();
}

std::vector<std::string> input_files(const std::string& in) {
  if (fs::is_directory(in)) return list_images(in).files;
  if (!fs::exists(in)) throw IoError("no such file or directory: " + in);
  return {in};
}

TrainingData load_data(const AppConfig& cfg) {
  const std::string content =
      cfg.train.mode == TrainMode::style_transfer ? cfg.content_dir : std::string();
  if (cfg.train.mode == TrainMode::style_transfer && content.empty()) {
    throw ConfigError("style_transfer mode needs a content directory");
  }
  const DatasetIndex index = index_dataset(content, cfg.styles);
  if (index.skipped > 0) {
    std::cerr << "warning: skipped " << index.skipped << " non-image entries\n";
  }
  return load_training_data(index);
}

int cmd_train(const std::string& config, const std::string& resume,
              const std::vector<std::string>& sets) {
  const AppConfig cfg = load_config(config, process_env(), sets);
  const TrainingData data = load_data(cfg);
  std::optional<TrainState> state;
  if (!resume.empty()) state = load_checkpoint(resume, cfg.styles.size());
  ensure_dir(cfg.output_dir);
  const TrainOutputs outputs{(fs::path(cfg.output_dir) / "metrics.jsonl").string(),
                             (fs::path(cfg.output_dir) / "checkpoints").string()};
  const TrainState done = train(cfg.train, data, outputs, std::move(state));
  std::cout << "trained to iteration " << done.iteration << "; checkpoint "
            << (fs::path(outputs.checkpoint_dir) / "final.ggck").string() << '\n';
  return 0;
}

int cmd_add_style(const std::string& ckpt, const std::string& style_dir, const std::string& config,
                  const std::string& out, const std::vector<std::string>& sets) {
  const AppConfig cfg = load_config(config, process_env(), sets);
  TrainingData data = load_data(cfg);
  TrainState state = load_checkpoint(ckpt, cfg.styles.size());
  const std::string name =
      cfg.style_name.empty() ? fs::path(style_dir).lexically_normal().filename().string() : cfg.style_name;
  std::vector<TensorF> collection = load_images(list_images(style_dir).files);
  incremental_add_style(state, data, std::move(collection), name, cfg.add_style_iterations);
  const std::string target = out.empty() ? (fs::path(cfg.output_dir) / ("with_" + name + ".ggck")).string() : out;
  if (out.empty()) ensure_dir(cfg.output_dir);
  save_checkpoint(state, target);
  std::cout << "added style '" << name << "' as index " << state.generator.style_count() - 1
            << "; checkpoint " << target << '\n';
  return 0;
}

int cmd_stylize(const std::string& ckpt, const std::string& style, const std::string& in,
                const std::string& out) {
  const TrainState state = load_checkpoint(ckpt);
  const std::size_t c = resolve_style(state, style);
  ensure_dir(out);
  for (const auto& file : input_files(in)) {
    const TensorF result = stylize_native(state.generator, load_image(file), c);
    save_image(result, out_path(out, fs::path(file).stem().string()));
  }
  return 0;
}

int cmd_interpolate(const std::string& ckpt, const std::string& from, const std::string& to,
                    std::size_t steps, const std::string& in, const std::string& out) {
  const TrainState state = load_checkpoint(ckpt);
  const std::size_t c1 = resolve_style(state, from);
  const std::size_t c2 = resolve_style(state, to);
  // Frames run from the --from style (alpha = 1 on c1) to the --to style.
  std::vector<TensorF> frames = render_interpolation(load_image(in), state.generator, c1, c2, steps);
  ensure_dir(out);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%03zu", i);
    save_image(frames[frames.size() - 1 - i], out_path(out, stem));
  }
  return 0;
}

int cmd_synthesize(const std::string& ckpt, const std::string& style, std::size_t count,
                   const std::string& out, std::uint64_t seed, std::size_t size) {
  const TrainState state = load_checkpoint(ckpt);
  const std::size_t c = resolve_style(state, style);
  TrainConfig cfg = state.config;
  cfg.mode = TrainMode::texture_synthesis;
  if (size != 0) cfg.image_size = size;
  if (cfg.image_size % 4 != 0) throw ArgumentError("--size must be a multiple of 4");
  std::mt19937_64 rng(seed);
  ensure_dir(out);
  for (std::size_t i = 0; i < count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "texture_%03zu", i);
    save_image(generate(state.generator, sample_noise(cfg, rng), c), out_path(out, stem));
  }
  return 0;
}

int cmd_visualize(const std::string& ckpt, const std::string& style, std::size_t channel,
                  const std::string& out, double magnitude, std::size_t extent, std::uint64_t seed) {
  const TrainState state = load_checkpoint(ckpt);
  const std::size_t c = resolve_style(state, style);
  save_image(visualize_branch_feature(state.generator, c, channel, magnitude, extent, seed), out);
  return 0;
}

int cmd_fid(const std::string& ckpt, const std::string& style, const std::string& content,
            const std::string& real, std::uint64_t seed) {
  const TrainState state = load_checkpoint(ckpt);
  const std::size_t c = resolve_style(state, style);
  FidReport r = evaluate_collection(state.generator, load_images(list_images(content).files), c,
                                    load_images(list_images(real).files), seed);
  r.style = state.style_names.at(c);
  std::cout << report_line(r) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated-GAN multi-collection style transfer"};
  app.require_subcommand(1);

  std::string config, resume, ckpt, style, in, out, style_dir, from, to, content, real;
  std::vector<std::string> sets;
  std::size_t steps = 0, count = 0, channel = 0, extent = 3, size = 0;
  std::uint64_t seed = 0;
  double magnitude = 1.0;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", config, "Config file")->required();
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
  train_cmd->add_option("--set", sets, "Override a config key (key=value)");

  auto* add_cmd = app.add_subcommand("add-style", "Add a style branch to a trained model");
  add_cmd->add_option("--ckpt", ckpt, "Trained checkpoint")->required();
  add_cmd->add_option("--style-dir", style_dir, "Directory of the new collection")->required();
  add_cmd->add_option("--config", config, "Config naming the existing collections")->required();
  add_cmd->add_option("--out", out, "Output checkpoint");
  add_cmd->add_option("--set", sets, "Override a config key (key=value)");

  auto* stylize_cmd = app.add_subcommand("stylize", "Render images in one style");
  stylize_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  stylize_cmd->add_option("--style", style, "Style index or name")->required();
  stylize_cmd->add_option("--in", in, "Image or directory")->required();
  stylize_cmd->add_option("--out", out, "Output directory")->required();

  auto* interp_cmd = app.add_subcommand("interpolate", "Blend two styles over a frame sequence");
  interp_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  interp_cmd->add_option("--from", from, "First style")->required();
  interp_cmd->add_option("--to", to, "Last style")->required();
  interp_cmd->add_option("--steps", steps, "Number of frames")->required();
  interp_cmd->add_option("--in", in, "Input image")->required();
  interp_cmd->add_option("--out", out, "Output directory")->required();

  auto* synth_cmd = app.add_subcommand("synthesize-texture", "Generate textures from noise");
  synth_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  synth_cmd->add_option("--style", style, "Style index or name")->required();
  synth_cmd->add_option("--count", count, "Number of samples")->required();
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--seed", seed, "Noise seed");
  synth_cmd->add_option("--size", size, "Output extent (default: training image size)");

  auto* vis_cmd = app.add_subcommand("visualize-branch", "Decode one activated feature channel");
  vis_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  vis_cmd->add_option("--style", style, "Branch index or name")->required();
  vis_cmd->add_option("--channel", channel, "Feature channel")->required();
  vis_cmd->add_option("--out", out, "Output image")->required();
  vis_cmd->add_option("--magnitude", magnitude, "Noise scale");
  vis_cmd->add_option("--extent", extent, "Feature map extent");
  vis_cmd->add_option("--seed", seed, "Noise seed");

  auto* fid_cmd = app.add_subcommand("fid", "Score a style against a real collection");
  fid_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  fid_cmd->add_option("--style", style, "Style index or name")->required();
  fid_cmd->add_option("--content", content, "Content directory")->required();
  fid_cmd->add_option("--real", real, "Real collection directory")->required();
  fid_cmd->add_option("--seed", seed, "Feature extractor seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(config, resume, sets);
    if (*add_cmd) return cmd_add_style(ckpt, style_dir, config, out, sets);
    if (*stylize_cmd) return cmd_stylize(ckpt, style, in, out);
    if (*interp_cmd) return cmd_interpolate(ckpt, from, to, steps, in, out);
    if (*synth_cmd) return cmd_synthesize(ckpt, style, count, out, seed, size);
    if (*vis_cmd) return cmd_visualize(ckpt, style, channel, out, magnitude, extent, seed);
    if (*fid_cmd) return cmd_fid(ckpt, style, content, real, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.error_class() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
