#include "gatedgan/models.hpp"

#include <cmath>
#include <optional>

namespace gatedgan {
namespace {

constexpr Padding kReflect3{PadMode::reflect, 3};
constexpr Padding kZero1{PadMode::zero, 1};
constexpr double kInitStd = 0.02;

template <typename T>
Tensor<T> gaussian(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
ConvParams<T> make_conv(std::size_t in, std::size_t out, std::size_t k, std::mt19937_64& rng) {
  return {gaussian<T>({out, in, k, k}, kInitStd, rng), Tensor<T>({out}, T{0})};
}

// Transposed kernels are stored (in, out, k, k).
template <typename T>
ConvParams<T> make_conv_transpose(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return {gaussian<T>({in, out, 3, 3}, kInitStd, rng), Tensor<T>({out}, T{0})};
}

template <typename T>
NormParams<T> make_norm(std::size_t channels) {
  return {Tensor<T>({channels}, T{1}), Tensor<T>({channels}, T{0})};
}

template <typename T>
ConvNormParams<T> make_conv_norm(std::size_t in, std::size_t out, std::size_t k,
                                 std::mt19937_64& rng) {
  ConvNormParams<T> layer;
  layer.conv = make_conv<T>(in, out, k, rng);
  layer.norm = make_norm<T>(out);
  return layer;
}

template <typename T>
ResidualBlockParams<T> make_block(std::size_t channels, std::mt19937_64& rng) {
  ResidualBlockParams<T> block;
  block.first = make_conv_norm<T>(channels, channels, 3, rng);
  block.second = make_conv_norm<T>(channels, channels, 3, rng);
  return block;
}

template <typename T, typename Visitor>
void visit_conv(const std::string& prefix, ConvParams<T>& p, const Visitor& f) {
  f(prefix + ".weight", p.weight);
  f(prefix + ".bias", p.bias);
}

template <typename T, typename Visitor>
void visit_conv_norm(const std::string& prefix, ConvNormParams<T>& p, const Visitor& f) {
  visit_conv(prefix + ".conv", p.conv, f);
  f(prefix + ".norm.gamma", p.norm.gamma);
  f(prefix + ".norm.beta", p.norm.beta);
}

template <typename T, typename Visitor>
void visit_block(const std::string& prefix, ResidualBlockParams<T>& p, const Visitor& f) {
  visit_conv_norm(prefix + ".first", p.first, f);
  visit_conv_norm(prefix + ".second", p.second, f);
}

template <typename T>
Var<T> conv_layer(ParamBinder<T>& bind, const ConvParams<T>& p, Var<T> x, std::size_t stride,
                  Padding padding) {
  return conv2d(x, bind(p.weight), bind(p.bias), stride, padding);
}

template <typename T>
Var<T> norm_layer(ParamBinder<T>& bind, const NormParams<T>& p, Var<T> x) {
  return instance_normalize(x, bind(p.gamma), bind(p.beta));
}

template <typename T>
Var<T> conv_norm_act(ParamBinder<T>& bind, const ConvNormParams<T>& p, Var<T> x,
                     std::size_t stride, Padding padding, Activation act) {
  return activation(norm_layer(bind, p.norm, conv_layer(bind, p.conv, x, stride, padding)), act);
}

template <typename T>
Var<T> residual_block(ParamBinder<T>& bind, const ResidualBlockParams<T>& p, Var<T> x) {
  Var<T> h = conv_norm_act(bind, p.first, x, 1, kZero1, Activation::relu);
  h = norm_layer(bind, p.second.norm, conv_layer(bind, p.second.conv, h, 1, kZero1));
  return add(x, h);
}

// Smallest zero padding that still yields one output unit on a tiny map.
Padding fitted_padding(std::size_t extent, std::size_t kernel, std::size_t padding) {
  std::size_t p = padding;
  while (extent + 2 * p < kernel) ++p;
  return Padding{PadMode::zero, p};
}

}  // namespace

std::size_t ModelConfig::channels(std::size_t reference) const {
  const auto scaled = static_cast<std::size_t>(std::lround(double(reference) * width_scale));
  return scaled == 0 ? 1 : scaled;
}

// --------------------------------------------------------------------------
// GeneratorParams

template <typename T>
GeneratorParams<T> GeneratorParams<T>::initialize(const ModelConfig& config,
                                                  std::mt19937_64& rng) {
  if (config.style_count == 0) throw ArgumentError("generator needs at least one style");
  if (config.branch_depth == 0) throw ArgumentError("branch depth must be at least 1");
  if (!(config.width_scale > 0.0)) throw ArgumentError("width_scale must be positive");
  GeneratorParams p;
  p.config = config;
  const std::size_t c32 = config.channels(32), c64 = config.channels(64),
                    c128 = config.channels(128);
  p.encoder[0] = make_conv_norm<T>(3, c32, 7, rng);
  p.encoder[1] = make_conv_norm<T>(c32, c64, 3, rng);
  p.encoder[2] = make_conv_norm<T>(c64, c128, 3, rng);
  const std::size_t k = config.style_count;
  p.branches.clear();
  p.config.style_count = 0;
  for (std::size_t c = 0; c < k; ++c) p.add_branch(rng);
  for (std::size_t i = 0; i < kDecoderBlocks; ++i) p.decoder_blocks.push_back(make_block<T>(c128, rng));
  p.upsample[0].conv = make_conv_transpose<T>(c128, c64, rng);
  p.upsample[0].norm = make_norm<T>(c64);
  p.upsample[1].conv = make_conv_transpose<T>(c64, c32, rng);
  p.upsample[1].norm = make_norm<T>(c32);
  p.output = make_conv<T>(c32, 3, 7, rng);
  return p;
}

template <typename T>
std::size_t GeneratorParams<T>::add_branch(std::mt19937_64& rng) {
  std::vector<ResidualBlockParams<T>> branch;
  for (std::size_t b = 0; b < config.branch_depth; ++b) {
    branch.push_back(make_block<T>(feature_channels(), rng));
  }
  branches.push_back(std::move(branch));
  config.style_count = branches.size();
  return branches.size() - 1;
}

template <typename T>
void GeneratorParams<T>::visit_encoder(const ParamVisitor<T>& f) {
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    visit_conv_norm("encoder." + std::to_string(i), encoder[i], f);
  }
}

template <typename T>
void GeneratorParams<T>::visit_branch(std::size_t c, const ParamVisitor<T>& f) {
  if (c >= branches.size()) {
    throw IndexError("branch " + std::to_string(c) + " of " + std::to_string(branches.size()));
  }
  for (std::size_t b = 0; b < branches[c].size(); ++b) {
    visit_block("branch." + std::to_string(c) + "." + std::to_string(b), branches[c][b], f);
  }
}

template <typename T>
void GeneratorParams<T>::visit_decoder(const ParamVisitor<T>& f) {
  for (std::size_t i = 0; i < decoder_blocks.size(); ++i) {
    visit_block("decoder.block." + std::to_string(i), decoder_blocks[i], f);
  }
  for (std::size_t i = 0; i < upsample.size(); ++i) {
    visit_conv_norm("decoder.up." + std::to_string(i), upsample[i], f);
  }
  visit_conv("decoder.out", output, f);
}

template <typename T>
void GeneratorParams<T>::visit(const ParamVisitor<T>& f) {
  visit_encoder(f);
  for (std::size_t c = 0; c < branches.size(); ++c) visit_branch(c, f);
  visit_decoder(f);
}

template <typename T>
void GeneratorParams<T>::visit(const ConstParamVisitor<T>& f) const {
  const_cast<GeneratorParams*>(this)->visit(
      ParamVisitor<T>([&f](const std::string& name, Tensor<T>& t) { f(name, t); }));
}

template <typename T>
std::size_t GeneratorParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit(ConstParamVisitor<T>([&n](const std::string&, const Tensor<T>& t) { n += t.numel(); }));
  return n;
}

template <typename T>
std::size_t GeneratorParams<T>::branch_parameter_count() const {
  if (branches.empty()) return 0;
  std::size_t n = 0;
  const_cast<GeneratorParams*>(this)->visit_branch(
      0, [&n](const std::string&, Tensor<T>& t) { n += t.numel(); });
  return n;
}

// --------------------------------------------------------------------------
// DiscriminatorParams

template <typename T>
DiscriminatorParams<T> DiscriminatorParams<T>::initialize(const ModelConfig& config,
                                                          std::mt19937_64& rng) {
  if (config.style_count == 0) throw ArgumentError("discriminator needs at least one class");
  DiscriminatorParams d;
  d.config = config;
  const std::size_t c64 = config.channels(64), c128 = config.channels(128),
                    c256 = config.channels(256), c512 = config.channels(512);
  d.first = make_conv<T>(3, c64, 4, rng);
  d.trunk[0] = make_conv_norm<T>(c64, c128, 4, rng);
  d.trunk[1] = make_conv_norm<T>(c128, c256, 4, rng);
  d.trunk[2] = make_conv_norm<T>(c256, c512, 4, rng);
  d.adv_head = make_conv<T>(c512, 1, 4, rng);
  d.cls_head = make_conv<T>(c512, config.style_count, 4, rng);
  return d;
}

template <typename T>
void DiscriminatorParams<T>::add_class(std::mt19937_64& rng) {
  const Shape& ws = cls_head.weight.shape();
  const std::size_t k = ws[0];
  Buffer<T> weight = cls_head.weight.storage();
  const Tensor<T> row = gaussian<T>({1, ws[1], ws[2], ws[3]}, kInitStd, rng);
  weight.insert(weight.end(), row.data().begin(), row.data().end());
  Buffer<T> bias = cls_head.bias.storage();
  bias.push_back(T{0});
  cls_head.weight = Tensor<T>({k + 1, ws[1], ws[2], ws[3]}, std::move(weight));
  cls_head.bias = Tensor<T>({k + 1}, std::move(bias));
  config.style_count = k + 1;
}

template <typename T>
void DiscriminatorParams<T>::visit_trunk(const ParamVisitor<T>& f) {
  visit_conv("disc.first", first, f);
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    visit_conv_norm("disc.trunk." + std::to_string(i), trunk[i], f);
  }
}

template <typename T>
void DiscriminatorParams<T>::visit(const ParamVisitor<T>& f) {
  visit_trunk(f);
  visit_conv("disc.adv_head", adv_head, f);
  visit_conv("disc.cls_head", cls_head, f);
}

template <typename T>
void DiscriminatorParams<T>::visit(const ConstParamVisitor<T>& f) const {
  const_cast<DiscriminatorParams*>(this)->visit(
      ParamVisitor<T>([&f](const std::string& name, Tensor<T>& t) { f(name, t); }));
}

template <typename T>
std::size_t DiscriminatorParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit(ConstParamVisitor<T>([&n](const std::string&, const Tensor<T>& t) { n += t.numel(); }));
  return n;
}

// --------------------------------------------------------------------------
// StyleWeights

StyleWeights::StyleWeights(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.empty()) throw ArgumentError("style weights must not be empty");
  double total = 0.0;
  for (double a : alpha_) {
    if (!(a >= 0.0)) throw ArgumentError("style weights must be non-negative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ArgumentError("style weights must sum to 1, got " + std::to_string(total));
  }
}

StyleWeights StyleWeights::one_hot(std::size_t c, std::size_t k) {
  if (c >= k) throw IndexError("style " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
  std::vector<double> alpha(k, 0.0);
  alpha[c] = 1.0;
  return StyleWeights(std::move(alpha));
}

StyleWeights StyleWeights::mix(std::size_t c1, std::size_t c2, double alpha, std::size_t k) {
  if (c1 >= k || c2 >= k) throw IndexError("style index outside [0, " + std::to_string(k) + ")");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("blend alpha must lie in [0, 1]");
  std::vector<double> w(k, 0.0);
  w[c1] += alpha;
  w[c2] += 1.0 - alpha;
  return StyleWeights(std::move(w));
}

// --------------------------------------------------------------------------
// ParamBinder

template <typename T>
Var<T> ParamBinder<T>::operator()(const Tensor<T>& param) {
  if (auto it = bound_.find(&param); it != bound_.end()) return it->second;
  const bool trainable = trainable_.count(&param) > 0;
  Var<T> v = trainable ? tape_->variable(param) : tape_->constant(param);
  bound_.emplace(&param, v);
  return v;
}

template <typename T>
const Tensor<T>* ParamBinder<T>::grad(const Tensor<T>& param) const {
  auto it = bound_.find(&param);
  if (it == bound_.end()) return nullptr;
  return tape_->grad(it->second);
}

// --------------------------------------------------------------------------
// Forward passes

template <typename T>
Var<T> encoder_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != 3) {
    throw ShapeError("encoder expects (N, 3, H, W) images, got " + shape_string(s));
  }
  if (s[2] % 4 != 0 || s[3] % 4 != 0) {
    throw ShapeError("encoder needs spatial extents divisible by 4, got " + shape_string(s));
  }
  Var<T> h = conv_norm_act(bind, p.encoder[0], x, 1, kReflect3, Activation::relu);
  h = conv_norm_act(bind, p.encoder[1], h, 2, kZero1, Activation::relu);
  return conv_norm_act(bind, p.encoder[2], h, 2, kZero1, Activation::relu);
}

template <typename T>
Var<T> branch_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, std::size_t c,
                      Var<T> features) {
  if (c >= p.style_count()) {
    throw IndexError("style " + std::to_string(c) + " outside [0, " +
                     std::to_string(p.style_count()) + ")");
  }
  if (features.shape().size() != 4 || features.shape()[1] != p.feature_channels()) {
    throw ShapeError("branch input " + shape_string(features.shape()) + " does not carry " +
                     std::to_string(p.feature_channels()) + " channels");
  }
  Var<T> h = features;
  for (const auto& block : p.branches[c]) h = residual_block(bind, block, h);
  return h;
}

template <typename T>
Var<T> gated_transform(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> features,
                       const StyleWeights& w) {
  if (w.size() != p.style_count()) {
    throw ArgumentError("got " + std::to_string(w.size()) + " gate weights for " +
                        std::to_string(p.style_count()) + " branches");
  }
  std::optional<Var<T>> acc;
  for (std::size_t c = 0; c < w.size(); ++c) {
    if (w[c] == 0.0) continue;
    Var<T> out = branch_forward(bind, p, c, features);
    if (w[c] != 1.0) out = scale(out, w[c]);
    acc = acc ? add(*acc, out) : out;
  }
  return *acc;
}

template <typename T>
Var<T> decoder_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> features) {
  if (features.shape().size() != 4 || features.shape()[1] != p.feature_channels()) {
    throw ShapeError("decoder input " + shape_string(features.shape()) + " does not carry " +
                     std::to_string(p.feature_channels()) + " channels");
  }
  Var<T> h = features;
  for (const auto& block : p.decoder_blocks) h = residual_block(bind, block, h);
  for (const auto& up : p.upsample) {
    h = conv2d_transpose(h, bind(up.conv.weight), bind(up.conv.bias), 2);
    h = relu(norm_layer(bind, up.norm, h));
  }
  return tanh(conv_layer(bind, p.output, h, 1, kReflect3));
}

template <typename T>
Var<T> generator_forward(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x,
                         std::size_t c) {
  const StyleWeights w = StyleWeights::one_hot(c, p.style_count());
  return decoder_forward(bind, p, gated_transform(bind, p, encoder_forward(bind, p, x), w));
}

template <typename T>
Var<T> reconstruct(ParamBinder<T>& bind, const GeneratorParams<T>& p, Var<T> x) {
  return decoder_forward(bind, p, encoder_forward(bind, p, x));
}

template <typename T>
Var<T> discriminator_trunk(ParamBinder<T>& bind, const DiscriminatorParams<T>& d, Var<T> x) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != 3) {
    throw ShapeError("discriminator expects (N, 3, H, W) images, got " + shape_string(s));
  }
  const auto fitted = [](Var<T> v, std::size_t k, std::size_t p) {
    return fitted_padding(std::min(v.shape()[2], v.shape()[3]), k, p);
  };
  Var<T> h = leaky_relu(conv_layer(bind, d.first, x, 2, fitted(x, 4, 1)));
  for (std::size_t i = 0; i < d.trunk.size(); ++i) {
    const std::size_t stride = i < 2 ? 2 : 1;
    h = conv_norm_act(bind, d.trunk[i], h, stride, fitted(h, 4, 1), Activation::leaky_relu);
  }
  return h;
}

template <typename T>
Var<T> discriminate(ParamBinder<T>& bind, const DiscriminatorParams<T>& d, Var<T> x) {
  Var<T> h = discriminator_trunk(bind, d, x);
  return conv_layer(bind, d.adv_head, h, 1,
                    fitted_padding(std::min(h.shape()[2], h.shape()[3]), 4, 1));
}

template <typename T>
DiscriminatorOutputs<T> discriminate_and_classify(ParamBinder<T>& bind,
                                                  const DiscriminatorParams<T>& d, Var<T> x) {
  Var<T> h = discriminator_trunk(bind, d, x);
  const Padding pad = fitted_padding(std::min(h.shape()[2], h.shape()[3]), 4, 1);
  Var<T> scores = conv_layer(bind, d.adv_head, h, 1, pad);
  Var<T> logits = conv_layer(bind, d.cls_head, h, 1, pad);
  return {scores, logits, spatial_mean(logits)};
}

// --------------------------------------------------------------------------
// Tensor-level helpers

template <typename T>
Tensor<T> generate(const GeneratorParams<T>& p, const Tensor<T>& x, std::size_t c) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return generator_forward(bind, p, tape.constant(x), c).value();
}

template <typename T>
Tensor<T> generate_blend(const GeneratorParams<T>& p, const Tensor<T>& x, const StyleWeights& w) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  Var<T> f = encoder_forward(bind, p, tape.constant(x));
  return decoder_forward(bind, p, gated_transform(bind, p, f, w)).value();
}

template <typename T>
Tensor<T> reconstruct_image(const GeneratorParams<T>& p, const Tensor<T>& x) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return reconstruct(bind, p, tape.constant(x)).value();
}

template <typename T>
Tensor<T> encode(const GeneratorParams<T>& p, const Tensor<T>& x) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return encoder_forward(bind, p, tape.constant(x)).value();
}

template <typename T>
Tensor<T> transform(const GeneratorParams<T>& p, const Tensor<T>& features, const StyleWeights& w) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return gated_transform(bind, p, tape.constant(features), w).value();
}

template <typename T>
Tensor<T> decode(const GeneratorParams<T>& p, const Tensor<T>& features) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return decoder_forward(bind, p, tape.constant(features)).value();
}

template <typename T>
Tensor<T> patch_scores(const DiscriminatorParams<T>& d, const Tensor<T>& x) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  return discriminate(bind, d, tape.constant(x)).value();
}

template <typename T>
ClassPrediction classify_style(const DiscriminatorParams<T>& d, const Tensor<T>& x) {
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  const DiscriminatorOutputs<T> out = discriminate_and_classify(bind, d, tape.constant(x));
  ClassPrediction pred;
  pred.pooled_distribution = softmax(out.pooled_logits.value()).template cast<double>();
  const std::size_t k = pred.pooled_distribution.dim(1);
  for (std::size_t r = 0; r < pred.pooled_distribution.dim(0); ++r) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (pred.pooled_distribution[r * k + i] > pred.pooled_distribution[r * k + best]) best = i;
    }
    pred.labels.push_back(best);
  }
  return pred;
}

template <typename T>
Tensor<T> visualize_branch_feature(const GeneratorParams<T>& p, std::size_t branch,
                                   std::size_t channel, double magnitude, std::size_t extent,
                                   std::uint64_t seed) {
  if (branch >= p.style_count()) {
    throw IndexError("branch " + std::to_string(branch) + " outside [0, " +
                     std::to_string(p.style_count()) + ")");
  }
  const std::size_t channels = p.feature_channels();
  if (channel >= channels) {
    throw IndexError("channel " + std::to_string(channel) + " outside [0, " +
                     std::to_string(channels) + ")");
  }
  if (extent == 0) throw ArgumentError("feature extent must be positive");
  Tensor<T> features({1, channels, extent, extent}, T{0});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t y = 0; y < extent; ++y) {
    for (std::size_t x = 0; x < extent; ++x) {
      features.at(0, channel, y, x) = static_cast<T>(magnitude * dist(rng));
    }
  }
  Tape<T> tape;
  ParamBinder<T> bind(tape);
  Var<T> h = branch_forward(bind, p, branch, tape.constant(std::move(features)));
  return decoder_forward(bind, p, h).value();
}

// --------------------------------------------------------------------------
// Receptive field

std::vector<LayerSpec> discriminator_layers() {
  return {
      {LayerKind::conv, 4, 2, 1},  // first
      {LayerKind::conv, 4, 2, 1},  // trunk 0
      {LayerKind::conv, 4, 2, 1},  // trunk 1
      {LayerKind::conv, 4, 1, 1},  // trunk 2
      {LayerKind::conv, 4, 1, 1},  // head
  };
}

namespace {
void require_conv_chain(const std::vector<LayerSpec>& layers) {
  for (const LayerSpec& l : layers) {
    if (l.kind != LayerKind::conv) {
      throw ArgumentError("receptive field supports convolution layers only");
    }
    if (l.kernel == 0 || l.stride == 0) throw ArgumentError("kernel and stride must be positive");
  }
}
}  // namespace

std::size_t receptive_field(const std::vector<LayerSpec>& layers) {
  require_conv_chain(layers);
  std::size_t r = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = (r - 1) * it->stride + it->kernel;
  return r;
}

std::pair<std::ptrdiff_t, std::ptrdiff_t> receptive_window(const std::vector<LayerSpec>& layers,
                                                           std::size_t index) {
  require_conv_chain(layers);
  auto lo = static_cast<std::ptrdiff_t>(index);
  auto hi = lo;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    const auto s = static_cast<std::ptrdiff_t>(it->stride);
    const auto p = static_cast<std::ptrdiff_t>(it->padding);
    const auto k = static_cast<std::ptrdiff_t>(it->kernel);
    lo = lo * s - p;
    hi = hi * s - p + k - 1;
  }
  return {lo, hi};
}

namespace {

TensorD run_probe_chain(const std::vector<LayerSpec>& layers, const TensorD& image) {
  Tape<double> tape;
  Var<double> h = tape.constant(image);
  for (const LayerSpec& l : layers) {
    Var<double> k = tape.constant(TensorD({1, 1, l.kernel, l.kernel}, 1.0));
    Var<double> b = tape.constant(TensorD({1}, 0.0));
    h = conv2d(h, k, b, l.stride, Padding{PadMode::zero, l.padding});
  }
  return h.value();
}

}  // namespace

std::size_t probe_receptive_field(const std::vector<LayerSpec>& layers, std::size_t extent) {
  require_conv_chain(layers);
  const TensorD blank({1, 1, extent, extent}, 0.0);
  const TensorD base = run_probe_chain(layers, blank);
  const std::size_t oy = base.dim(2) / 2, ox = base.dim(3) / 2;
  std::ptrdiff_t first = -1, last = -1;
  for (std::size_t col = 0; col < extent; ++col) {
    TensorD probe = blank;
    for (std::size_t row = 0; row < extent; ++row) probe.at(0, 0, row, col) = 1.0;
    const TensorD out = run_probe_chain(layers, probe);
    if (out.at(0, 0, oy, ox) != base.at(0, 0, oy, ox)) {
      if (first < 0) first = static_cast<std::ptrdiff_t>(col);
      last = static_cast<std::ptrdiff_t>(col);
    }
  }
  if (first < 0) return 0;
  return static_cast<std::size_t>(last - first + 1);
}

std::vector<std::pair<std::size_t, std::size_t>> probe_affected_outputs(
    const std::vector<LayerSpec>& layers, std::size_t extent, std::size_t y, std::size_t x) {
  require_conv_chain(layers);
  if (y >= extent || x >= extent) throw IndexError("probe pixel outside the image");
  TensorD image({1, 1, extent, extent}, 0.0);
  const TensorD base = run_probe_chain(layers, image);
  image.at(0, 0, y, x) = 1.0;
  const TensorD out = run_probe_chain(layers, image);
  std::vector<std::pair<std::size_t, std::size_t>> affected;
  for (std::size_t r = 0; r < out.dim(2); ++r) {
    for (std::size_t c = 0; c < out.dim(3); ++c) {
      if (out.at(0, 0, r, c) != base.at(0, 0, r, c)) affected.emplace_back(r, c);
    }
  }
  return affected;
}

#define GATEDGAN_INSTANTIATE_MODELS(T)                                                        \
  template struct GeneratorParams<T>;                                                         \
  template struct DiscriminatorParams<T>;                                                     \
  template class ParamBinder<T>;                                                              \
  template Var<T> encoder_forward(ParamBinder<T>&, const GeneratorParams<T>&, Var<T>);        \
  template Var<T> branch_forward(ParamBinder<T>&, const GeneratorParams<T>&, std::size_t,     \
                                 Var<T>);                                                     \
  template Var<T> gated_transform(ParamBinder<T>&, const GeneratorParams<T>&, Var<T>,         \
                                  const StyleWeights&);                                       \
  template Var<T> decoder_forward(ParamBinder<T>&, const GeneratorParams<T>&, Var<T>);        \
  template Var<T> generator_forward(ParamBinder<T>&, const GeneratorParams<T>&, Var<T>,       \
                                    std::size_t);                                             \
  template Var<T> reconstruct(ParamBinder<T>&, const GeneratorParams<T>&, Var<T>);            \
  template Var<T> discriminator_trunk(ParamBinder<T>&, const DiscriminatorParams<T>&, Var<T>); \
  template Var<T> discriminate(ParamBinder<T>&, const DiscriminatorParams<T>&, Var<T>);       \
  template DiscriminatorOutputs<T> discriminate_and_classify(                                 \
      ParamBinder<T>&, const DiscriminatorParams<T>&, Var<T>);                                \
  template Tensor<T> generate(const GeneratorParams<T>&, const Tensor<T>&, std::size_t);      \
  template Tensor<T> generate_blend(const GeneratorParams<T>&, const Tensor<T>&,              \
                                    const StyleWeights&);                                     \
  template Tensor<T> reconstruct_image(const GeneratorParams<T>&, const Tensor<T>&);          \
  template Tensor<T> encode(const GeneratorParams<T>&, const Tensor<T>&);                     \
  template Tensor<T> transform(const GeneratorParams<T>&, const Tensor<T>&,                   \
                               const StyleWeights&);                                          \
  template Tensor<T> decode(const GeneratorParams<T>&, const Tensor<T>&);                     \
  template Tensor<T> patch_scores(const DiscriminatorParams<T>&, const Tensor<T>&);           \
  template ClassPrediction classify_style(const DiscriminatorParams<T>&, const Tensor<T>&);   \
  template Tensor<T> visualize_branch_feature(const GeneratorParams<T>&, std::size_t,         \
                                              std::size_t, double, std::size_t, std::uint64_t);

GATEDGAN_INSTANTIATE_MODELS(float)
GATEDGAN_INSTANTIATE_MODELS(double)

}  // namespace gatedgan
