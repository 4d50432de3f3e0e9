#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gatedgan/models.hpp"

namespace gatedgan {

/// Running mean and co-moment of feature vectors.
struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd comoment;  // sum of (x - mu)(x - mu)^T
  std::size_t count = 0;

  explicit GaussianStats(std::size_t dim = 0);
  /// Statistics with the given mean and unbiased covariance.
  static GaussianStats from_moments(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                                    std::size_t count);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()); }
  /// Unbiased covariance. Requires count >= 2.
  Eigen::MatrixXd sigma() const;
};

/// Adds the rows of `features` to `stats`.
GaussianStats accumulate_stats(GaussianStats stats, const Eigen::MatrixXd& features);
/// Combines statistics of two disjoint sample sets.
GaussianStats merge_stats(const GaussianStats& a, const GaussianStats& b);
GaussianStats stats_from(const Eigen::MatrixXd& features);

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
  std::size_t sweeps = 0;
};

/// Cyclic Jacobi rotations until every off-diagonal entry is below
/// tol times the Frobenius norm.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-10);

/// Symmetric square root of a PSD matrix; slightly negative eigenvalues are
/// treated as zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a);

/// Frechet distance between two Gaussians.
double fid(const GaussianStats& sx, const GaussianStats& sg);

/// Fixed random convolutional feature extractor: three stride-2 3x3 conv +
/// ReLU layers followed by global average pooling.
class FeatureEmbedder {
 public:
  static constexpr std::size_t kDim = 256;

  explicit FeatureEmbedder(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  /// One row per image of the (N, 3, H, W) batch; H, W >= 8.
  Eigen::MatrixXd embed(const TensorF& images) const;
  Eigen::MatrixXd embed(const std::vector<TensorF>& images) const;

 private:
  std::uint64_t seed_;
  std::vector<ConvParams<float>> layers_;
};

/// Frames for alpha = i / (steps - 1), alpha weighting c1.
std::vector<TensorF> render_interpolation(const TensorF& x, const GeneratorParams<float>& p,
                                          std::size_t c1, std::size_t c2, std::size_t steps);

/// Stylizes an image of any size >= 4: reflect-pads the bottom and right edges
/// up to a multiple of 4, runs the generator and crops back.
TensorF stylize_native(const GeneratorParams<float>& p, const TensorF& image, std::size_t c);
TensorF stylize_native(const GeneratorParams<float>& p, const TensorF& image,
                       const StyleWeights& w);

struct FidReport {
  std::string style;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  std::uint64_t extractor_seed = 0;
  double fid = 0.0;
};

std::string report_line(const FidReport& r);

/// Stylizes every content image with style c and scores it against `real`.
FidReport evaluate_collection(const GeneratorParams<float>& p, const std::vector<TensorF>& content,
                              std::size_t c, const std::vector<TensorF>& real,
                              std::uint64_t extractor_seed);

/// FID between two image sets.
double fid_between(const std::vector<TensorF>& a, const std::vector<TensorF>& b,
                   std::uint64_t extractor_seed);

/// Mean L1 distance over all unordered pairs.
double pairwise_l1_diversity(const std::vector<TensorF>& images);

// ---------------------------------------------------------------------------
// Probe classifier: the discriminator trunk and style head trained from
// scratch with cross-entropy on real crops only.

struct ProbeConfig {
  std::size_t iterations = 600;
  std::size_t image_size = 32;
  double width_scale = 0.25;
  double learning_rate = 2e-4;
  std::uint64_t seed = 7;
};

DiscriminatorParams<float> train_probe_classifier(const std::vector<std::vector<TensorF>>& styles,
                                                  const ProbeConfig& cfg);

/// Fraction of images the probe assigns to `label`.
double probe_accuracy(const DiscriminatorParams<float>& probe, const std::vector<TensorF>& images,
                      std::size_t label);

}  // namespace gatedgan
