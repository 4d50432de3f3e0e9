#include "gatedgan/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "gatedgan/checkpoint.hpp"

namespace gatedgan {
namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void mark_trainable(ParamBinder<float>& bind, const std::vector<ParamUpdate<float>>& updates) {
  for (const auto& u : updates) bind.train(*u.param);
}

// Trainable parameter lists; the grad pointers are filled after backward.
std::vector<ParamUpdate<float>> generator_group(TrainState& s, std::size_t branch, bool shared) {
  std::vector<ParamUpdate<float>> out;
  auto add = [&out](const std::string& name, TensorF& t) { out.push_back({name, &t, nullptr}); };
  if (shared) s.generator.visit_encoder(add);
  s.generator.visit_branch(branch, add);
  if (shared) s.generator.visit_decoder(add);
  return out;
}

std::vector<ParamUpdate<float>> autoencoder_group(TrainState& s) {
  std::vector<ParamUpdate<float>> out;
  auto add = [&out](const std::string& name, TensorF& t) { out.push_back({name, &t, nullptr}); };
  s.generator.visit_encoder(add);
  s.generator.visit_decoder(add);
  return out;
}

std::vector<ParamUpdate<float>> discriminator_group(TrainState& s) {
  std::vector<ParamUpdate<float>> out;
  s.discriminator.visit(ParamVisitor<float>(
      [&out](const std::string& name, TensorF& t) { out.push_back({name, &t, nullptr}); }));
  return out;
}

void attach_grads(std::vector<ParamUpdate<float>>& updates, const ParamBinder<float>& bind) {
  for (auto& u : updates) u.grad = bind.grad(*u.param);
}

class Sampler {
 public:
  Sampler(TrainState& state, const TrainingData& data) : s_(state), data_(data) {}

  TensorF real(std::size_t c) {
    std::vector<TensorF> items;
    for (std::size_t b = 0; b < s_.config.batch_size; ++b) {
      const auto& collection = data_.styles.at(c);
      items.push_back(augment(collection[uniform_index(s_.rng, collection.size())], s_.config, s_.rng));
    }
    return stack_batch<float>(items);
  }

  TensorF input() {
    std::vector<TensorF> items;
    for (std::size_t b = 0; b < s_.config.batch_size; ++b) {
      if (s_.config.mode == TrainMode::texture_synthesis) {
        items.push_back(sample_noise(s_.config, s_.rng));
      } else {
        const auto& content = data_.content;
        items.push_back(augment(content[uniform_index(s_.rng, content.size())], s_.config, s_.rng));
      }
    }
    return stack_batch<float>(items);
  }

 private:
  TrainState& s_;
  const TrainingData& data_;
};

}  // namespace

std::string to_string(TrainMode mode) {
  return mode == TrainMode::texture_synthesis ? "texture_synthesis" : "style_transfer";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "style_transfer") return TrainMode::style_transfer;
  if (text == "texture_synthesis") return TrainMode::texture_synthesis;
  throw ConfigError("unknown mode '" + text + "' (expected style_transfer or texture_synthesis)");
}

std::size_t TrainConfig::effective_scale_size() const {
  if (scale_size != 0) return scale_size;
  return static_cast<std::size_t>(std::lround(double(image_size) * 143.0 / 128.0));
}

ModelConfig TrainConfig::model() const {
  return ModelConfig{style_count, width_scale, branch_depth};
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (k_d < 1 || k_g < 1) throw ConfigError("k_d and k_g must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (image_size < 4 || image_size % 4 != 0) {
    throw ConfigError("image_size must be a positive multiple of 4");
  }
  if (effective_scale_size() <= image_size) throw ConfigError("scale_size must exceed image_size");
  if (style_count < 1) throw ConfigError("style_count must be at least 1");
  if (branch_depth < 1 || branch_depth > 2) throw ConfigError("branch_depth must be 1 or 2");
  if (!(width_scale > 0.0)) throw ConfigError("width_scale must be positive");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be at least 1");
  if (log_interval < 1) throw ConfigError("log_interval must be at least 1");
  weights.validate();
}

// ---------------------------------------------------------------------------
// ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity_ == 0) throw ArgumentError("replay buffer capacity must be positive");
}

TensorF ReplayBuffer::query(const TensorF& fresh, std::size_t style) {
  if (entries_.size() < capacity_) return query_with(fresh, style, false, 0);
  const bool use_history = std::uniform_int_distribution<int>(0, 1)(rng_) == 1;
  const std::size_t slot = use_history ? uniform_index(rng_, entries_.size()) : 0;
  return query_with(fresh, style, use_history, slot);
}

TensorF ReplayBuffer::query_with(const TensorF& fresh, std::size_t style, bool use_history,
                                 std::size_t slot) {
  if (entries_.size() < capacity_) {
    entries_.push_back({fresh, style});
    return fresh;
  }
  if (!use_history) return fresh;
  if (slot >= entries_.size()) throw IndexError("replay slot " + std::to_string(slot));
  ++history_returns_;
  TensorF old = std::move(entries_[slot].image);
  entries_[slot] = {fresh, style};
  return old;
}

void ReplayBuffer::restore(std::vector<Entry> entries, const std::mt19937_64& rng,
                           std::uint64_t history_returns) {
  if (entries.size() > capacity_) throw ArgumentError("replay buffer restore exceeds capacity");
  entries_ = std::move(entries);
  rng_ = rng;
  history_returns_ = history_returns;
}

// ---------------------------------------------------------------------------
// Augmentation

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, std::size_t height, std::size_t width) {
  if (image.rank() != 4) throw ShapeError("resize expects (N, C, H, W)");
  if (height == 0 || width == 0) throw ArgumentError("resize target must be non-empty");
  const std::size_t n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  Tensor<T> out({n, c, height, width});
  const double sy = double(h) / double(height), sx = double(w) / double(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((double(y) + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - double(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((double(x) + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - double(x0);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double top = (1.0 - wx) * image.at(b, ch, y0, x0) + wx * image.at(b, ch, y0, x1);
          const double bottom = (1.0 - wx) * image.at(b, ch, y1, x0) + wx * image.at(b, ch, y1, x1);
          out.at(b, ch, y, x) = static_cast<T>((1.0 - wy) * top + wy * bottom);
        }
      }
    }
  }
  return out;
}

template TensorF resize_bilinear(const TensorF&, std::size_t, std::size_t);
template TensorD resize_bilinear(const TensorD&, std::size_t, std::size_t);

TensorF augment_with(const TensorF& image, std::size_t image_size, std::size_t scale_size,
                     const CropChoice& choice) {
  if (scale_size < image_size) throw ArgumentError("scale_size smaller than image_size");
  if (choice.top + image_size > scale_size || choice.left + image_size > scale_size) {
    throw IndexError("crop window outside the resized image");
  }
  const TensorF resized = resize_bilinear(image, scale_size, scale_size);
  const std::size_t n = resized.dim(0), c = resized.dim(1);
  TensorF out({n, c, image_size, image_size});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < image_size; ++y) {
        for (std::size_t x = 0; x < image_size; ++x) {
          const std::size_t sx = choice.left + x;
          const std::size_t src_x = choice.flip ? scale_size - 1 - sx : sx;
          out.at(b, ch, y, x) = resized.at(b, ch, choice.top + y, src_x);
        }
      }
    }
  }
  return out;
}

TensorF augment(const TensorF& image, const TrainConfig& cfg, std::mt19937_64& rng) {
  const std::size_t scale = cfg.effective_scale_size();
  CropChoice choice;
  choice.flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  choice.top = uniform_index(rng, scale - cfg.image_size + 1);
  choice.left = uniform_index(rng, scale - cfg.image_size + 1);
  return augment_with(image, cfg.image_size, scale, choice);
}

TensorF sample_noise(const TrainConfig& cfg, std::mt19937_64& rng) {
  if (cfg.mode != TrainMode::texture_synthesis) {
    throw ArgumentError("noise inputs are only used in texture_synthesis mode");
  }
  TensorF out({1, 3, cfg.image_size, cfg.image_size});
  std::normal_distribution<double> dist(0.0, 1.0);
  for (float& v : out.data()) v = static_cast<float>(dist(rng));
  return out;
}

// ---------------------------------------------------------------------------
// State

void TrainingData::validate(TrainMode mode) const {
  if (styles.empty()) throw DatasetError("no style collections");
  for (std::size_t c = 0; c < styles.size(); ++c) {
    if (styles[c].empty()) throw DatasetError("style collection " + std::to_string(c) + " is empty");
  }
  if (mode == TrainMode::style_transfer && content.empty()) {
    throw DatasetError("content set is empty");
  }
}

bool LossRecord::finite() const {
  for (double v : {d_loss, d_cls, g_adv, g_cls, tv, recon}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

TrainState TrainState::initialize(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.config = cfg;
  s.rng.seed(cfg.seed);
  s.generator = GeneratorParams<float>::initialize(cfg.model(), s.rng);
  s.discriminator = DiscriminatorParams<float>::initialize(cfg.model(), s.rng);
  const AdamSettings adam{cfg.learning_rate};
  s.d_optimizer = Adam<float>(adam);
  s.g_optimizer = Adam<float>(adam);
  s.ae_optimizer = Adam<float>(adam);
  s.buffer = ReplayBuffer(cfg.buffer_capacity, s.rng());
  for (std::size_t c = 0; c < cfg.style_count; ++c) s.style_names.push_back(std::to_string(c));
  return s;
}

StepCounters TrainState::counters() const {
  return {d_optimizer.steps(), g_optimizer.steps(), ae_optimizer.steps()};
}

LossRecord train_step(TrainState& s, const TrainingData& data, const PhaseObserver& observer) {
  const auto started = std::chrono::steady_clock::now();
  const TrainConfig& cfg = s.config;
  const std::size_t k = s.generator.style_count();
  if (data.styles.size() != k || s.discriminator.style_count() != k) {
    throw ArgumentError("training data has " + std::to_string(data.styles.size()) +
                        " collections for a " + std::to_string(k) + "-style model");
  }
  const bool incremental = s.frozen_styles > 0;
  Sampler sample(s, data);
  LossRecord rec;
  rec.iteration = s.iteration;
  const char* phase = "discriminator";
  try {
    const std::size_t c = uniform_index(s.rng, k);

    for (std::size_t step = 0; step < cfg.k_d; ++step) {
      const TensorF y = sample.real(c);
      const TensorF x = sample.input();
      const TensorF fake = generate(s.generator, x, c);
      std::vector<TensorF> replayed;
      for (std::size_t b = 0; b < fake.dim(0); ++b) {
        replayed.push_back(s.buffer.query(batch_item(fake, b), c));
      }
      Tape<float> tape;
      ParamBinder<float> bind(tape);
      auto updates = discriminator_group(s);
      mark_trainable(bind, updates);
      const auto real_out = discriminate_and_classify(bind, s.discriminator, tape.constant(y));
      const Var<float> fake_scores =
          discriminate(bind, s.discriminator, tape.constant(stack_batch<float>(replayed)));
      const Var<float> adv = lsgan_d_loss(real_out.scores, fake_scores);
      const Var<float> cls = classifier_loss_real(real_out.pooled_logits, c);
      const Var<float> total = add(adv, cls);
      tape.backward(total);
      attach_grads(updates, bind);
      s.d_optimizer.step(updates);
      if (observer) observer(TrainPhase::discriminator, s);
      rec.d_loss = adv.value().item();
      rec.d_cls = cls.value().item();
    }

    phase = "generator";
    // Frozen branches have nothing to update, so old styles only train D.
    const std::size_t g_steps = c < s.frozen_styles ? 0 : cfg.k_g;
    for (std::size_t step = 0; step < g_steps; ++step) {
      const TensorF x = sample.input();
      Tape<float> tape;
      ParamBinder<float> bind(tape);
      auto updates = generator_group(s, c, !incremental);
      mark_trainable(bind, updates);
      const Var<float> fake = generator_forward(bind, s.generator, tape.constant(x), c);
      const auto out = discriminate_and_classify(bind, s.discriminator, fake);
      const Var<float> adv = lsgan_g_loss(out.scores);
      const Var<float> cls = classifier_loss_generated(out.pooled_logits, c);
      const Var<float> tv = tv_loss(fake);
      const Var<float> objective = generator_objective(adv, cls, tv, cfg.weights);
      tape.backward(objective);
      attach_grads(updates, bind);
      s.g_optimizer.step(updates);
      if (observer) observer(TrainPhase::generator, s);
      rec.g_adv = adv.value().item();
      rec.g_cls = cls.value().item();
      rec.tv = tv.value().item();
    }

    phase = "autoencoder";
    if (!incremental) {
      // Texture inputs are noise, so the auto-encoder learns on real crops.
      const TensorF x = cfg.mode == TrainMode::texture_synthesis ? sample.real(c) : sample.input();
      Tape<float> tape;
      ParamBinder<float> bind(tape);
      auto updates = autoencoder_group(s);
      const bool active = cfg.weights.lambda_r > 0.0;
      if (active) mark_trainable(bind, updates);
      const Var<float> xv = tape.constant(x);
      const Var<float> recon = reconstruction_loss(xv, reconstruct(bind, s.generator, xv));
      if (active) {
        tape.backward(scale(recon, cfg.weights.lambda_r));
        attach_grads(updates, bind);
        s.ae_optimizer.step(updates);
        if (observer) observer(TrainPhase::autoencoder, s);
      }
      rec.recon = recon.value().item();
    }
  } catch (const NumericError& e) {
    throw NumericError("iteration " + std::to_string(s.iteration) + ", " + phase +
                       " update: " + e.what());
  }
  if (!rec.finite()) {
    throw NumericError("iteration " + std::to_string(s.iteration) + ": non-finite loss record " +
                       metrics_line(rec));
  }
  if (cfg.record_wall_time) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                      .count();
  }
  ++s.iteration;
  return rec;
}

void run_training(TrainState& state, const TrainingData& data, std::uint64_t until,
                  const TrainHooks& hooks) {
  data.validate(state.config.mode);
  while (state.iteration < until) {
    const LossRecord rec = train_step(state, data);
    if (hooks.on_log && rec.iteration % state.config.log_interval == 0) hooks.on_log(rec);
    if (hooks.on_checkpoint && state.config.checkpoint_interval > 0 &&
        state.iteration % state.config.checkpoint_interval == 0) {
      hooks.on_checkpoint(state);
    }
  }
}

std::string metrics_line(const LossRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["d_loss"] = r.d_loss;
  j["d_cls"] = r.d_cls;
  j["g_adv"] = r.g_adv;
  j["g_cls"] = r.g_cls;
  j["tv"] = r.tv;
  j["recon"] = r.recon;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

namespace {

TrainHooks file_hooks(const TrainOutputs& outputs, std::ofstream& metrics) {
  TrainHooks hooks;
  if (metrics.is_open()) {
    hooks.on_log = [&metrics, path = outputs.metrics_path](const LossRecord& r) {
      metrics << metrics_line(r) << '\n';
      if (!metrics) throw IoError("failed writing metrics log " + path);
    };
  }
  if (!outputs.checkpoint_dir.empty()) {
    hooks.on_checkpoint = [dir = outputs.checkpoint_dir](const TrainState& s) {
      save_checkpoint(s, (std::filesystem::path(dir) /
                          ("ckpt_" + std::to_string(s.iteration) + ".ggck")).string());
    };
  }
  return hooks;
}

}  // namespace

TrainState train(const TrainConfig& cfg, const TrainingData& data, const TrainOutputs& outputs,
                 std::optional<TrainState> resume) {
  cfg.validate();
  TrainState state = resume ? std::move(*resume) : TrainState::initialize(cfg);
  state.config.iterations = cfg.iterations;
  state.config.log_interval = cfg.log_interval;
  state.config.checkpoint_interval = cfg.checkpoint_interval;
  state.config.record_wall_time = cfg.record_wall_time;
  if (data.style_names.size() == state.generator.style_count()) state.style_names = data.style_names;

  std::ofstream metrics;
  if (!outputs.metrics_path.empty()) {
    const auto parent = std::filesystem::path(outputs.metrics_path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    const auto mode = resume ? std::ios::app : std::ios::trunc;
    metrics.open(outputs.metrics_path, std::ios::out | mode);
    if (!metrics) throw IoError("cannot open metrics log " + outputs.metrics_path);
  }
  if (!outputs.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(outputs.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + outputs.checkpoint_dir + ": " + ec.message());
  }
  run_training(state, data, cfg.iterations, file_hooks(outputs, metrics));
  if (!outputs.checkpoint_dir.empty()) {
    save_checkpoint(state, (std::filesystem::path(outputs.checkpoint_dir) / "final.ggck").string());
  }
  return state;
}

void incremental_add_style(TrainState& state, TrainingData& data,
                           std::vector<TensorF> new_collection, const std::string& name,
                           std::size_t iterations, const TrainHooks& hooks) {
  if (new_collection.empty()) throw DatasetError("new style collection '" + name + "' is empty");
  const std::size_t old_k = state.generator.style_count();
  if (data.styles.size() != old_k) {
    throw ArgumentError("incremental training needs the " + std::to_string(old_k) +
                        " existing collections for replay");
  }
  state.generator.add_branch(state.rng);
  state.discriminator.add_class(state.rng);
  state.d_optimizer.forget("disc.cls_head.weight");
  state.d_optimizer.forget("disc.cls_head.bias");
  state.config.style_count = old_k + 1;
  state.style_names.resize(old_k, "");
  state.style_names.push_back(name);
  data.styles.push_back(std::move(new_collection));
  data.style_names = state.style_names;
  state.frozen_styles = old_k;
  run_training(state, data, state.iteration + iterations, hooks);
  state.frozen_styles = 0;
}

}  // namespace gatedgan
