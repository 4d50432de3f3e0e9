#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gatedgan/autodiff.hpp"

namespace gatedgan {

/// Architecture knobs shared by the generator and the discriminator.
struct ModelConfig {
  std::size_t style_count = 1;
  /// Multiplies every channel count; 1.0 is the reference network.
  double width_scale = 1.0;
  /// Residual blocks per gated-transformer branch (1 or 2).
  std::size_t branch_depth = 1;

  std::size_t channels(std::size_t reference) const;
};

template <typename T>
struct ConvParams {
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
struct NormParams {
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
struct ConvNormParams {
  ConvParams<T> conv;
  NormParams<T> norm;
};

template <typename T>
struct ResidualBlockParams {
  ConvNormParams<T> first;
  ConvNormParams<T> second;
};

/// Visitor receiving every tensor of a model together with its stable name.
template <typename T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&)>;
template <typename T>
using ConstParamVisitor = std::function<void(const std::string&, const Tensor<T>&)>;

/// Shared encoder, K interchangeable transformer branches, shared decoder.
template <typename T>
struct GeneratorParams {
  ModelConfig config;
  std::array<ConvNormParams<T>, 3> encoder;
  std::vector<std::vector<ResidualBlockParams<T>>> branches;
  std::vector<ResidualBlockParams<T>> decoder_blocks;
  std::array<ConvNormParams<T>, 2> upsample;
  ConvParams<T> output;

  static constexpr std::size_t kDecoderBlocks = 5;

  static GeneratorParams initialize(const ModelConfig& config, std::mt19937_64& rng);

  std::size_t style_count() const noexcept { return branches.size(); }
  std::size_t feature_channels() const { return config.channels(128); }

  /// Appends a freshly initialized branch and returns its index.
  std::size_t add_branch(std::mt19937_64& rng);

  // Named visitation in manifest order: encoder, branches, decoder.
  void visit(const ParamVisitor<T>& f);
  void visit(const ConstParamVisitor<T>& f) const;
  void visit_encoder(const ParamVisitor<T>& f);
  void visit_branch(std::size_t c, const ParamVisitor<T>& f);
  void visit_decoder(const ParamVisitor<T>& f);

  std::size_t parameter_count() const;
  std::size_t branch_parameter_count() const;
};

/// Patch discriminator trunk shared by a real/fake head and a K-way style head.
template <typename T>
struct DiscriminatorParams {
  ModelConfig config;
  ConvParams<T> first;
  std::array<ConvNormParams<T>, 3> trunk;
  ConvParams<T> adv_head;
  ConvParams<T> cls_head;

  static DiscriminatorParams initialize(const ModelConfig& config, std::mt19937_64& rng);

  std::size_t style_count() const { return cls_head.bias.numel(); }

  /// Grows the classifier head by one output class; existing rows are kept.
  void add_class(std::mt19937_64& rng);

  void visit(const ParamVisitor<T>& f);
  void visit(const ConstParamVisitor<T>& f) const;
  void visit_trunk(const ParamVisitor<T>& f);
  std::size_t parameter_count() const;
};

/// Convex gate weights over the K branches.
class StyleWeights {
 public:
  explicit StyleWeights(std::vector<double> alpha);
  static StyleWeights one_hot(std::size_t c, std::size_t k);
  /// alpha weights c1 and (1 - alpha) weights c2.
  static StyleWeights mix(std::size_t c1, std::size_t c2, double alpha, std::size_t k);

  std::size_t size() const noexcept { return alpha_.size(); }
  double operator[](std::size_t i) const { return alpha_.at(i); }

 private:
  std::vector<double> alpha_;
};

/// Binds parameter tensors to tape leaves once per tape. Tensors marked
/// trainable become gradient-carrying variables; everything else is constant.
template <typename T>
class ParamBinder {
 public:
  explicit ParamBinder(Tape<T>& tape) : tape_(&tape) {}

  void train(Tensor<T>& param) { trainable_.insert(&param); }
  Var<T> operator()(const Tensor<T>& param);
  /// Gradient of a trainable parameter after Tape::backward, or nullptr.
  const Tensor<T>* grad(const Tensor<T>& param) const;
  std::size_t bound_count() const noexcept { return bound_.size(); }
  Tape<T>& tape() noexcept { return *tape_; }

 private:
  Tape<T>* tape_;
  std::unordered_map<const Tensor<T>*, Var<T>> bound_;
  std::unordered_set<const Tensor<T>*> trainable_;
};

template <typename T>
Var<T> encoder_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x);
template <typename T>
Var<T> branch_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, std::size_t c,
                      Var<T> features);
/// Sum of w_c * Branch_c(f). Branches with zero weight are not evaluated, so
/// one-hot weights reproduce the selected branch exactly.
template <typename T>
Var<T> gated_transform(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> features,
                       const StyleWeights& w);
template <typename T>
Var<T> decoder_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> features);
template <typename T>
Var<T> generator_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x,
                         std::size_t c);
/// Dec(Enc(x)); no branch is evaluated.
template <typename T>
Var<T> reconstruct(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x);

template <typename T>
struct DiscriminatorOutputs {
  Var<T> scores;         // (N, 1, h, w) raw real/fake patch scores
  Var<T> class_logits;   // (N, K, h, w) per-patch style logits
  Var<T> pooled_logits;  // (N, K) spatial mean of class_logits
};

template <typename T>
Var<T> discriminator_trunk(ParamBinder<T>& bind, const DiscriminatorParams<T>& d, Var<T> x);
template <typename T>
Var<T> discriminate(ParamBinder<T>& bind, const DiscriminatorParams<T>& d, Var<T> x);
/// Both heads over one trunk evaluation.
template <typename T>
DiscriminatorOutputs<T> discriminate_and_classify(ParamBinder<T>& bind,
                                                  const DiscriminatorParams<T>& d, Var<T> x);

struct ClassPrediction {
  Tensor<double> pooled_distribution;  // (N, K), rows sum to 1
  std::vector<std::size_t> labels;     // argmax per row
};

// Tensor-level inference helpers; each evaluates on a private tape.
template <typename T>
Tensor<T> generate(const GeneratorParams<T>& p, const Tensor<T>& x, std::size_t c);
template <typename T>
Tensor<T> generate_blend(const GeneratorParams<T>& p, const Tensor<T>& x, const StyleWeights& w);
template <typename T>
Tensor<T> reconstruct_image(const GeneratorParams<T>& p, const Tensor<T>& x);
template <typename T>
Tensor<T> encode(const GeneratorParams<T>& p, const Tensor<T>& x);
template <typename T>
Tensor<T> transform(const GeneratorParams<T>& p, const Tensor<T>& features, const StyleWeights& w);
template <typename T>
Tensor<T> decode(const GeneratorParams<T>& p, const Tensor<T>& features);
template <typename T>
Tensor<T> patch_scores(const DiscriminatorParams<T>& d, const Tensor<T>& x);
template <typename T>
ClassPrediction classify_style(const DiscriminatorParams<T>& d, const Tensor<T>& x);

/// Decodes a feature map that is zero except one channel, which holds
/// Gaussian noise scaled by `magnitude`, after passing it through `branch`.
template <typename T>
Tensor<T> visualize_branch_feature(const GeneratorParams<T>& p, std::size_t branch,
                                   std::size_t channel, double magnitude,
                                   std::size_t extent, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Receptive-field geometry.

enum class LayerKind { conv, conv_transpose };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Layers feeding one discriminator head output, in evaluation order.
std::vector<LayerSpec> discriminator_layers();

/// Receptive field of one output unit: r = 1, then r <- (r - 1) * s + k
/// walking the chain from the output back to the input.
std::size_t receptive_field(const std::vector<LayerSpec>& layers);

/// Input interval [first, last] (may extend past the border) seen by output
/// position `index` along one axis.
std::pair<std::ptrdiff_t, std::ptrdiff_t> receptive_window(const std::vector<LayerSpec>& layers,
                                                           std::size_t index);

/// Measures the receptive field empirically: builds a single-channel chain of
/// the given geometry with positive kernels, perturbs pixels one at a time
/// along the centre row and reports how wide the span of pixels that change
/// the centre output unit is.
std::size_t probe_receptive_field(const std::vector<LayerSpec>& layers, std::size_t extent);

/// Output positions (row, col) that change when input pixel (y, x) is perturbed.
std::vector<std::pair<std::size_t, std::size_t>> probe_affected_outputs(
    const std::vector<LayerSpec>& layers, std::size_t extent, std::size_t y, std::size_t x);

}  // namespace gatedgan
