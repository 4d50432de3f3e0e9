#include "gatedgan/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace gatedgan {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string resolve(const std::string& base_dir, const std::string& value) {
  const fs::path p(value);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void add_style(AppConfig& cfg, const std::string& name, const std::string& dir) {
  if (name.empty()) throw ConfigError("style entries need a name (style.<name> = <dir>)");
  for (auto& s : cfg.styles) {
    if (s.name == name) {
      s.dir = dir;
      return;
    }
  }
  cfg.styles.push_back({name, dir});
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "learning_rate", "batch_size",   "k_d",        "k_g",
      "iterations",    "image_size",   "scale_size", "lambda_cls",
      "lambda_tv",     "lambda_r",     "seed",       "width_scale",
      "branch_depth",  "mode",         "buffer_capacity", "log_interval",
      "checkpoint_interval", "record_wall_time", "content", "manifest",
      "output_dir",    "add_style_iterations", "style_name"};
  return keys;
}

void apply_setting(AppConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir) {
  TrainConfig& t = cfg.train;
  if (key == "learning_rate") t.learning_rate = parse_double(key, value);
  else if (key == "batch_size") t.batch_size = parse_uint(key, value);
  else if (key == "k_d") t.k_d = parse_uint(key, value);
  else if (key == "k_g") t.k_g = parse_uint(key, value);
  else if (key == "iterations") t.iterations = parse_uint(key, value);
  else if (key == "image_size") t.image_size = parse_uint(key, value);
  else if (key == "scale_size") t.scale_size = parse_uint(key, value);
  else if (key == "lambda_cls") t.weights.lambda_cls = parse_double(key, value);
  else if (key == "lambda_tv") t.weights.lambda_tv = parse_double(key, value);
  else if (key == "lambda_r") t.weights.lambda_r = parse_double(key, value);
  else if (key == "seed") t.seed = parse_uint(key, value);
  else if (key == "width_scale") t.width_scale = parse_double(key, value);
  else if (key == "branch_depth") t.branch_depth = parse_uint(key, value);
  else if (key == "mode") t.mode = parse_train_mode(value);
  else if (key == "buffer_capacity") t.buffer_capacity = parse_uint(key, value);
  else if (key == "log_interval") t.log_interval = parse_uint(key, value);
  else if (key == "checkpoint_interval") t.checkpoint_interval = parse_uint(key, value);
  else if (key == "record_wall_time") t.record_wall_time = parse_bool(key, value);
  else if (key == "content") cfg.content_dir = resolve(base_dir, value);
  else if (key == "output_dir") cfg.output_dir = resolve(base_dir, value);
  else if (key == "add_style_iterations") cfg.add_style_iterations = parse_uint(key, value);
  else if (key == "style_name") cfg.style_name = value;
  else if (key == "manifest") {
    const DatasetManifest m = read_manifest(resolve(base_dir, value));
    if (!m.content_dir.empty()) cfg.content_dir = m.content_dir;
    for (const auto& s : m.styles) add_style(cfg, s.name, s.dir);
  } else if (key.rfind("style.", 0) == 0) {
    add_style(cfg, key.substr(6), resolve(base_dir, value));
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::string env_name(const std::string& key) {
  std::string out = "GATEDGAN_";
  for (char ch : key) {
    out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

AppConfig load_config(const std::string& path, const EnvLookup& env,
                      const std::vector<std::string>& overrides) {
  AppConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    const std::string base = fs::path(path).parent_path().string();
    for (const auto& [key, value] : parse_key_values(text.str(), path)) {
      apply_setting(cfg, key, value, base);
    }
  }
  if (env) {
    for (const auto& key : config_keys()) {
      if (auto v = env(env_name(key))) apply_setting(cfg, key, trim(*v), "");
    }
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' is not key=value");
    apply_setting(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)), "");
  }
  if (!cfg.styles.empty()) cfg.train.style_count = cfg.styles.size();
  cfg.train.validate();
  return cfg;
}

std::string format_config(const TrainConfig& t) {
  std::ostringstream out;
  out.precision(17);
  out << "learning_rate = " << t.learning_rate << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "k_d = " << t.k_d << '\n'
      << "k_g = " << t.k_g << '\n'
      << "iterations = " << t.iterations << '\n'
      << "image_size = " << t.image_size << '\n'
      << "scale_size = " << t.scale_size << '\n'
      << "lambda_cls = " << t.weights.lambda_cls << '\n'
      << "lambda_tv = " << t.weights.lambda_tv << '\n'
      << "lambda_r = " << t.weights.lambda_r << '\n'
      << "seed = " << t.seed << '\n'
      << "width_scale = " << t.width_scale << '\n'
      << "branch_depth = " << t.branch_depth << '\n'
      << "mode = " << to_string(t.mode) << '\n'
      << "buffer_capacity = " << t.buffer_capacity << '\n'
      << "log_interval = " << t.log_interval << '\n'
      << "checkpoint_interval = " << t.checkpoint_interval << '\n'
      << "record_wall_time = " << (t.record_wall_time ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace gatedgan
