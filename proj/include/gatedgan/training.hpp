#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gatedgan/losses.hpp"
#include "gatedgan/models.hpp"
#include "gatedgan/optim.hpp"

namespace gatedgan {

enum class TrainMode { style_transfer, texture_synthesis };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  double learning_rate = 2e-4;
  std::size_t batch_size = 1;
  std::size_t k_d = 1;
  std::size_t k_g = 1;
  std::size_t iterations = 0;
  std::size_t image_size = 32;
  /// 0 selects round(image_size * 143 / 128).
  std::size_t scale_size = 0;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t style_count = 1;
  double width_scale = 1.0;
  std::size_t branch_depth = 1;
  TrainMode mode = TrainMode::style_transfer;
  std::size_t buffer_capacity = 50;
  std::size_t log_interval = 100;
  /// 0 disables periodic checkpoints; the final state is still saved.
  std::size_t checkpoint_interval = 0;
  /// When false the wall_ms field of metric records is written as 0 so that
  /// logs of identical runs are byte-identical.
  bool record_wall_time = false;

  std::size_t effective_scale_size() const;
  ModelConfig model() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Replay buffer

/// Fixed-capacity history of generated images with their style labels.
class ReplayBuffer {
 public:
  struct Entry {
    TensorF image;
    std::size_t style = 0;
  };

  explicit ReplayBuffer(std::size_t capacity = 50, std::uint64_t seed = 0);

  /// Until full: store and return `fresh`. Afterwards, with probability 0.5
  /// return `fresh`; otherwise return a uniformly chosen stored image and put
  /// `fresh` in its slot.
  TensorF query(const TensorF& fresh, std::size_t style);

  /// Deterministic form of query with the random choices supplied.
  TensorF query_with(const TensorF& fresh, std::size_t style, bool use_history,
                     std::size_t slot);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::uint64_t history_returns() const noexcept { return history_returns_; }

  std::mt19937_64& rng() noexcept { return rng_; }
  const std::mt19937_64& rng() const noexcept { return rng_; }
  void restore(std::vector<Entry> entries, const std::mt19937_64& rng,
               std::uint64_t history_returns = 0);

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
  std::mt19937_64 rng_;
  std::uint64_t history_returns_ = 0;
};

// ---------------------------------------------------------------------------
// Augmentation and inputs

struct CropChoice {
  bool flip = false;
  std::size_t top = 0;
  std::size_t left = 0;
};

/// Bilinear resize with half-pixel centres.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, std::size_t height, std::size_t width);

/// Resize to scale_size^2, optionally mirror, crop image_size^2 at the choice.
TensorF augment_with(const TensorF& image, std::size_t image_size, std::size_t scale_size,
                     const CropChoice& choice);
/// Random flip (p = 0.5) and uniform crop offset.
TensorF augment(const TensorF& image, const TrainConfig& cfg, std::mt19937_64& rng);

/// Standard-normal (1, 3, image_size, image_size) input for texture synthesis.
TensorF sample_noise(const TrainConfig& cfg, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Training state

/// Images are (1, 3, H, W) in [-1, 1]. Content is unused in texture mode.
struct TrainingData {
  std::vector<TensorF> content;
  std::vector<std::vector<TensorF>> styles;
  std::vector<std::string> style_names;

  void validate(TrainMode mode) const;
};

struct LossRecord {
  std::uint64_t iteration = 0;
  double d_loss = 0.0;  // least-squares discriminator loss
  double d_cls = 0.0;   // classifier loss on real images
  double g_adv = 0.0;
  double g_cls = 0.0;
  double tv = 0.0;
  double recon = 0.0;
  double wall_ms = 0.0;

  bool finite() const;
};

struct StepCounters {
  std::uint64_t discriminator = 0;
  std::uint64_t generator = 0;
  std::uint64_t autoencoder = 0;
};

struct TrainState {
  TrainConfig config;
  std::vector<std::string> style_names;
  GeneratorParams<float> generator;
  DiscriminatorParams<float> discriminator;
  Adam<float> d_optimizer;
  Adam<float> g_optimizer;
  Adam<float> ae_optimizer;
  ReplayBuffer buffer;
  std::mt19937_64 rng;
  std::uint64_t iteration = 0;
  /// Branches [0, frozen_styles) and the encoder/decoder are fixed. Non-zero
  /// only while a style is being added incrementally.
  std::size_t frozen_styles = 0;

  static TrainState initialize(const TrainConfig& cfg);
  StepCounters counters() const;
};

enum class TrainPhase { discriminator, generator, autoencoder };

/// Called after every individual parameter update of a train_step.
using PhaseObserver = std::function<void(TrainPhase, const TrainState&)>;

/// One outer iteration: k_d discriminator/classifier updates, k_g generator
/// updates, then one auto-encoder update (skipped when lambda_r is 0).
/// Throws NumericError if a loss becomes non-finite.
LossRecord train_step(TrainState& state, const TrainingData& data,
                      const PhaseObserver& observer = {});

struct TrainHooks {
  std::function<void(const LossRecord&)> on_log;
  std::function<void(const TrainState&)> on_checkpoint;
};

/// Runs train_step until state.iteration reaches `until`. Logs every
/// log_interval-th iteration (counting from 0) and checkpoints every
/// checkpoint_interval iterations.
void run_training(TrainState& state, const TrainingData& data, std::uint64_t until,
                  const TrainHooks& hooks = {});

struct TrainOutputs {
  std::string metrics_path;     // line-delimited JSON records; empty to skip
  std::string checkpoint_dir;   // empty to skip checkpoints
};

/// Trains from scratch (or continues `resume`) to cfg.iterations, appending
/// metric records and writing checkpoints as configured.
TrainState train(const TrainConfig& cfg, const TrainingData& data, const TrainOutputs& outputs,
                 std::optional<TrainState> resume = std::nullopt);

/// Appends a fresh branch and classifier class for `new_collection`, then
/// trains only the new branch and the discriminator for `iterations` steps.
/// Each step samples a style over all collections as in joint training; the
/// generator update runs only when the new style is drawn. Encoder, decoder
/// and existing branches stay bit-identical.
void incremental_add_style(TrainState& state, TrainingData& data,
                           std::vector<TensorF> new_collection, const std::string& name,
                           std::size_t iterations, const TrainHooks& hooks = {});

std::string metrics_line(const LossRecord& record);

}  // namespace gatedgan
