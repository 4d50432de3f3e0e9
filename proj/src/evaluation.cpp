#include "gatedgan/evaluation.hpp"

#include <cmath>
#include <random>

#include <Eigen/Jacobi>

#include "json.hpp"

#include "gatedgan/training.hpp"

namespace gatedgan {
namespace {

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Reflect index for padding only towards larger coordinates.
std::size_t mirror(std::size_t i, std::size_t n) { return i < n ? i : 2 * n - 2 - i; }

TensorF pad_to_multiple(const TensorF& image, std::size_t multiple) {
  const std::size_t n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const std::size_t ph = (h + multiple - 1) / multiple * multiple;
  const std::size_t pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  if (ph - h >= h || pw - w >= w) {
    throw ShapeError("image " + shape_string(image.shape()) + " is too small to pad to a multiple of " +
                     std::to_string(multiple));
  }
  TensorF out({n, c, ph, pw});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x)
          out.at(b, ch, y, x) = image.at(b, ch, mirror(y, h), mirror(x, w));
  return out;
}

TensorF crop(const TensorF& image, std::size_t h, std::size_t w) {
  if (image.dim(2) == h && image.dim(3) == w) return image;
  const std::size_t n = image.dim(0), c = image.dim(1);
  TensorF out({n, c, h, w});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(b, ch, y, x) = image.at(b, ch, y, x);
  return out;
}

void check_image(const TensorF& image) {
  if (image.rank() != 4 || image.dim(1) != 3) {
    throw ShapeError("expected a (N, 3, H, W) image, got " + shape_string(image.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Statistics

GaussianStats::GaussianStats(std::size_t dim)
    : mu(Eigen::VectorXd::Zero(Eigen::Index(dim))),
      comoment(Eigen::MatrixXd::Zero(Eigen::Index(dim), Eigen::Index(dim))) {}

GaussianStats GaussianStats::from_moments(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                                          std::size_t count) {
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw ShapeError("covariance does not match the mean dimension");
  }
  if (count < 2) throw ArgumentError("statistics need at least 2 samples");
  GaussianStats s;
  s.mu = std::move(mu);
  s.comoment = sigma * double(count - 1);
  s.count = count;
  return s;
}

Eigen::MatrixXd GaussianStats::sigma() const {
  if (count < 2) {
    throw ArgumentError("covariance undefined for " + std::to_string(count) + " sample(s)");
  }
  return symmetrized(comoment / double(count - 1));
}

GaussianStats stats_from(const Eigen::MatrixXd& features) {
  GaussianStats s(std::size_t(features.cols()));
  if (features.rows() == 0) return s;
  s.count = std::size_t(features.rows());
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.comoment = centered.transpose() * centered;
  return s;
}

GaussianStats merge_stats(const GaussianStats& a, const GaussianStats& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  check_dims(a.dim(), b.dim(), "merge_stats");
  const double na = double(a.count), nb = double(b.count), n = na + nb;
  const Eigen::VectorXd delta = b.mu - a.mu;
  GaussianStats out;
  out.count = a.count + b.count;
  out.mu = a.mu + delta * (nb / n);
  out.comoment = a.comoment + b.comoment + delta * delta.transpose() * (na * nb / n);
  return out;
}

GaussianStats accumulate_stats(GaussianStats stats, const Eigen::MatrixXd& features) {
  if (stats.count > 0 || stats.dim() > 0) {
    check_dims(stats.dim(), std::size_t(features.cols()), "accumulate_stats");
  }
  return merge_stats(stats, stats_from(features));
}

// ---------------------------------------------------------------------------
// Linear algebra

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) throw ShapeError("eigen decomposition needs a square matrix");
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd m = symmetrized(a);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = m.norm();
  SymmetricEigen out;
  const std::size_t max_sweeps = 100;
  while (scale > 0.0) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(m(p, q)));
    if (off <= tol * scale) break;
    if (out.sweeps == max_sweeps) throw NumericError("Jacobi iteration did not converge");
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        Eigen::JacobiRotation<double> rot;
        rot.makeJacobi(m, p, q);
        m.applyOnTheLeft(p, q, rot.adjoint());
        m.applyOnTheRight(p, q, rot);
        v.applyOnTheRight(p, q, rot);
        m(p, q) = m(q, p) = 0.0;
      }
    }
    ++out.sweeps;
  }
  out.values = m.diagonal();
  out.vectors = std::move(v);
  return out;
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ShapeError("matrix square root needs a square matrix");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  const double bound = 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff());
  if (asym > bound) {
    throw ArgumentError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  const SymmetricEigen eig = jacobi_eigen(a);
  const Eigen::VectorXd roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrized(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
}

double fid(const GaussianStats& sx, const GaussianStats& sg) {
  check_dims(sx.dim(), sg.dim(), "fid");
  if (sx.count < 2 || sg.count < 2) {
    throw ArgumentError("fid needs at least 2 samples per set (got " + std::to_string(sx.count) +
                        " and " + std::to_string(sg.count) + ")");
  }
  const Eigen::MatrixXd cx = sx.sigma();
  const Eigen::MatrixXd cg = sg.sigma();
  if (sx.mu == sg.mu && cx == cg) return 0.0;
  const Eigen::MatrixXd root_x = matrix_sqrt_psd(cx);
  const Eigen::MatrixXd inner = symmetrized(root_x * cg * root_x);
  const SymmetricEigen eig = jacobi_eigen(inner);
  const double cross = eig.values.cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (sx.mu - sg.mu).squaredNorm() + cx.trace() + cg.trace() - 2.0 * cross;
  if (value >= 0.0) return value;
  if (value >= -1e-6) return 0.0;
  throw NumericError("fid came out negative (" + std::to_string(value) + ")");
}

// ---------------------------------------------------------------------------
// Embedding

FeatureEmbedder::FeatureEmbedder(std::uint64_t seed) : seed_(seed) {
  std::mt19937_64 rng(seed);
  const std::size_t widths[] = {3, 64, 128, kDim};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    TensorF weight({out, in, 3, 3});
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(9 * in)));
    for (float& w : weight.data()) w = static_cast<float>(dist(rng));
    layers_.push_back({std::move(weight), TensorF({out}, 0.0f)});
  }
}

Eigen::MatrixXd FeatureEmbedder::embed(const TensorF& images) const {
  check_image(images);
  if (images.dim(2) < 8 || images.dim(3) < 8) {
    throw ShapeError("embedding needs images of at least 8x8, got " + shape_string(images.shape()));
  }
  Tape<float> tape;
  Var<float> h = tape.constant(images);
  for (const auto& layer : layers_) {
    h = relu(conv2d(h, tape.constant(layer.weight), tape.constant(layer.bias), 2,
                    Padding{PadMode::zero, 1}));
  }
  const TensorF pooled = spatial_mean(h).value();
  const std::size_t n = pooled.dim(0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kDim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kDim; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pooled.data()[i * kDim + j];
    }
  }
  return out;
}

Eigen::MatrixXd FeatureEmbedder::embed(const std::vector<TensorF>& images) const {
  Eigen::MatrixXd out(0, Eigen::Index(kDim));
  for (const auto& image : images) {
    const Eigen::MatrixXd rows = embed(image);
    out.conservativeResize(out.rows() + rows.rows(), Eigen::NoChange);
    out.bottomRows(rows.rows()) = rows;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation helpers

std::vector<TensorF> render_interpolation(const TensorF& x, const GeneratorParams<float>& p,
                                          std::size_t c1, std::size_t c2, std::size_t steps) {
  const std::size_t k = p.style_count();
  if (c1 >= k || c2 >= k) {
    throw IndexError("style index " + std::to_string(std::max(c1, c2)) + " out of range for " +
                     std::to_string(k) + " styles");
  }
  if (c1 == c2) throw ArgumentError("interpolation needs two different styles");
  if (steps < 2) throw ArgumentError("interpolation needs at least 2 steps");
  std::vector<TensorF> frames;
  for (std::size_t i = 0; i < steps; ++i) {
    const double alpha = double(i) / double(steps - 1);
    frames.push_back(stylize_native(p, x, StyleWeights::mix(c1, c2, alpha, k)));
  }
  return frames;
}

TensorF stylize_native(const GeneratorParams<float>& p, const TensorF& image, std::size_t c) {
  if (c >= p.style_count()) {
    throw IndexError("style index " + std::to_string(c) + " out of range for " +
                     std::to_string(p.style_count()) + " styles");
  }
  return stylize_native(p, image, StyleWeights::one_hot(c, p.style_count()));
}

TensorF stylize_native(const GeneratorParams<float>& p, const TensorF& image,
                       const StyleWeights& w) {
  check_image(image);
  const TensorF padded = pad_to_multiple(image, 4);
  return crop(generate_blend(p, padded, w), image.dim(2), image.dim(3));
}

std::string report_line(const FidReport& r) {
  nlohmann::ordered_json j;
  j["style"] = r.style;
  j["n_real"] = r.n_real;
  j["n_gen"] = r.n_gen;
  j["extractor_seed"] = r.extractor_seed;
  j["fid"] = r.fid;
  return j.dump();
}

double fid_between(const std::vector<TensorF>& a, const std::vector<TensorF>& b,
                   std::uint64_t extractor_seed) {
  if (a.empty() || b.empty()) throw ArgumentError("fid needs non-empty image sets");
  const FeatureEmbedder embedder(extractor_seed);
  return fid(stats_from(embedder.embed(a)), stats_from(embedder.embed(b)));
}

FidReport evaluate_collection(const GeneratorParams<float>& p, const std::vector<TensorF>& content,
                              std::size_t c, const std::vector<TensorF>& real,
                              std::uint64_t extractor_seed) {
  if (content.empty() || real.empty()) throw ArgumentError("evaluation needs non-empty sets");
  std::vector<TensorF> generated;
  generated.reserve(content.size());
  for (const auto& x : content) generated.push_back(stylize_native(p, x, c));
  FidReport r;
  r.style = std::to_string(c);
  r.n_real = real.size();
  r.n_gen = generated.size();
  r.extractor_seed = extractor_seed;
  r.fid = fid_between(real, generated, extractor_seed);
  return r;
}

double pairwise_l1_diversity(const std::vector<TensorF>& images) {
  if (images.size() < 2) throw ArgumentError("diversity needs at least 2 images");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      total += double(l1_distance(images[i], images[j]));
      ++pairs;
    }
  }
  return total / double(pairs);
}

// ---------------------------------------------------------------------------
// Probe classifier

DiscriminatorParams<float> train_probe_classifier(const std::vector<std::vector<TensorF>>& styles,
                                                  const ProbeConfig& cfg) {
  if (styles.empty()) throw ArgumentError("probe needs at least one collection");
  for (const auto& s : styles) {
    if (s.empty()) throw ArgumentError("probe collection is empty");
  }
  std::mt19937_64 rng(cfg.seed);
  const ModelConfig model{styles.size(), cfg.width_scale, 1};
  auto probe = DiscriminatorParams<float>::initialize(model, rng);
  TrainConfig crop_cfg;
  crop_cfg.image_size = cfg.image_size;
  Adam<float> adam(AdamSettings{cfg.learning_rate});
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t c = std::uniform_int_distribution<std::size_t>(0, styles.size() - 1)(rng);
    const auto& pool = styles[c];
    const TensorF& src = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    const TensorF x = augment(src, crop_cfg, rng);
    Tape<float> tape;
    ParamBinder<float> bind(tape);
    std::vector<ParamUpdate<float>> updates;
    auto add = [&](const std::string& name, TensorF& t) {
      bind.train(t);
      updates.push_back({name, &t, nullptr});
    };
    probe.visit_trunk(add);
    add("disc.cls_head.weight", probe.cls_head.weight);
    add("disc.cls_head.bias", probe.cls_head.bias);
    const auto out = discriminate_and_classify(bind, probe, tape.constant(x));
    const Var<float> loss = softmax_cross_entropy(out.pooled_logits, c);
    tape.backward(loss);
    for (auto& u : updates) u.grad = bind.grad(*u.param);
    adam.step(updates);
  }
  return probe;
}

double probe_accuracy(const DiscriminatorParams<float>& probe, const std::vector<TensorF>& images,
                      std::size_t label) {
  if (images.empty()) throw ArgumentError("probe accuracy needs images");
  std::size_t hits = 0;
  for (const auto& image : images) {
    const ClassPrediction pred = classify_style(probe, image);
    for (std::size_t l : pred.labels) hits += l == label ? 1 : 0;
  }
  std::size_t total = 0;
  for (const auto& image : images) total += image.dim(0);
  return double(hits) / double(total);
}

}  // namespace gatedgan
