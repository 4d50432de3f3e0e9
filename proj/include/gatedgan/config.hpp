#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gatedgan/dataset.hpp"
#include "gatedgan/training.hpp"

namespace gatedgan {

/// Everything a `train` or `add-style` run needs.
struct AppConfig {
  TrainConfig train;
  std::string content_dir;
  std::vector<StyleSource> styles;
  std::string output_dir = "run";
  /// Iterations spent on a new branch by add-style.
  std::size_t add_style_iterations = 1000;
  /// Name of the style added by add-style; defaults to the directory name.
  std::string style_name;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Parses "key = value" lines. '#' starts a comment; blank lines are ignored.
KeyValues parse_key_values(const std::string& text, const std::string& source);

/// Applies one setting. Relative paths are resolved against base_dir.
/// Style collections are given as "style.<name> = <dir>"; "manifest = <file>"
/// pulls content and styles from a dataset manifest.
void apply_setting(AppConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir);

/// Name of the environment variable overriding `key`: GATEDGAN_ + upper case.
std::string env_name(const std::string& key);

/// Scalar keys that may be overridden from the environment.
const std::vector<std::string>& config_keys();

/// Reads `path` (may be empty), then environment overrides, then the
/// "key=value" overrides in order. Validates the result.
AppConfig load_config(const std::string& path, const EnvLookup& env,
                      const std::vector<std::string>& overrides);

EnvLookup process_env();

/// Serializes a training configuration in the same key = value format.
std::string format_config(const TrainConfig& cfg);

}  // namespace gatedgan
