#pragma once

#include "gatedgan/autodiff.hpp"

namespace gatedgan {

struct LossWeights {
  double lambda_cls = 1.0;
  double lambda_tv = 1e-6;
  double lambda_r = 10.0;

  void validate() const;
};

inline constexpr double kTvEpsilon = 1e-8;

/// mean((real - 1)^2) + mean(fake^2) over patches and batch.
template <typename T>
Var<T> lsgan_d_loss(Var<T> scores_real, Var<T> scores_fake);

/// mean((fake - 1)^2).
template <typename T>
Var<T> lsgan_g_loss(Var<T> scores_fake);

/// Per-element mean of |x_hat - x|.
template <typename T>
Var<T> reconstruction_loss(Var<T> x, Var<T> x_hat);

/// -log softmax(logits)[c] for pooled logits of a real style image. The
/// caller decides which parameters receive its gradient.
template <typename T>
Var<T> classifier_loss_real(Var<T> pooled_logits, std::size_t c);

/// Same cross-entropy evaluated on a generated image; used with the
/// classifier bound as constants so only the generator is updated.
template <typename T>
Var<T> classifier_loss_generated(Var<T> pooled_logits, std::size_t c);

/// Sum over batch, channel and every pixel that has both a right and a down
/// neighbour of sqrt(dx^2 + dy^2 + eps).
template <typename T>
Var<T> tv_loss(Var<T> image, double eps = kTvEpsilon);

/// adv + lambda_cls * cls + lambda_tv * tv. Reconstruction is optimized in its
/// own step.
template <typename T>
Var<T> generator_objective(Var<T> adv, Var<T> cls, Var<T> tv, const LossWeights& w);

/// Plain-number form of generator_objective.
double generator_objective_value(double adv, double cls, double tv, const LossWeights& w);

}  // namespace gatedgan
