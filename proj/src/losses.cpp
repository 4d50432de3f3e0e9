#include "gatedgan/losses.hpp"

#include <cmath>

namespace gatedgan {

void LossWeights::validate() const {
  if (!(lambda_cls >= 0.0) || !(lambda_tv >= 0.0) || !(lambda_r >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
}

template <typename T>
Var<T> lsgan_d_loss(Var<T> scores_real, Var<T> scores_fake) {
  return add(mean(square(add_scalar(scores_real, -1.0))), mean(square(scores_fake)));
}

template <typename T>
Var<T> lsgan_g_loss(Var<T> scores_fake) {
  return mean(square(add_scalar(scores_fake, -1.0)));
}

template <typename T>
Var<T> reconstruction_loss(Var<T> x, Var<T> x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw ShapeError("reconstruction_loss: " + shape_string(x.shape()) + " vs " +
                     shape_string(x_hat.shape()));
  }
  return mean(abs(sub(x_hat, x)));
}

template <typename T>
Var<T> classifier_loss_real(Var<T> pooled_logits, std::size_t c) {
  return softmax_cross_entropy(pooled_logits, c);
}

template <typename T>
Var<T> classifier_loss_generated(Var<T> pooled_logits, std::size_t c) {
  return softmax_cross_entropy(pooled_logits, c);
}

template <typename T>
Var<T> tv_loss(Var<T> image, double eps) {
  const Tensor<T>& img = image.value();
  if (img.rank() != 4 || img.dim(2) < 2 || img.dim(3) < 2) {
    throw ShapeError("tv_loss needs (N, C, H>=2, W>=2), got " + shape_string(img.shape()));
  }
  if (!(eps >= 0.0)) throw ArgumentError("tv epsilon must be non-negative");
  const std::size_t planes = img.dim(0) * img.dim(1), h = img.dim(2), w = img.dim(3);
  // Root terms are kept for the backward pass.
  std::vector<double> roots(planes * (h - 1) * (w - 1));
  double total = 0.0;
  std::size_t r = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = img.data().data() + p * h * w;
    for (std::size_t i = 0; i + 1 < h; ++i) {
      for (std::size_t j = 0; j + 1 < w; ++j) {
        const double v = src[i * w + j];
        const double dx = double(src[i * w + j + 1]) - v;
        const double dy = double(src[(i + 1) * w + j]) - v;
        roots[r] = std::sqrt(dx * dx + dy * dy + eps);
        total += roots[r++];
      }
    }
  }
  return image.tape->record(
      Tensor<T>::scalar(static_cast<T>(total)), {image},
      [image, roots = std::move(roots), planes, h, w](Tape<T>& tape, const Tensor<T>& g) {
        Tensor<T>* gx = tape.grad_target(image.id);
        const Tensor<T>& img = tape.value(image);
        std::size_t r = 0;
        for (std::size_t p = 0; p < planes; ++p) {
          const T* src = img.data().data() + p * h * w;
          T* dst = gx->data().data() + p * h * w;
          for (std::size_t i = 0; i + 1 < h; ++i) {
            for (std::size_t j = 0; j + 1 < w; ++j) {
              const double v = src[i * w + j];
              const double dx = double(src[i * w + j + 1]) - v;
              const double dy = double(src[(i + 1) * w + j]) - v;
              const double root = roots[r++];
              if (root == 0.0) continue;
              const double s = double(g[0]) / root;
              dst[i * w + j + 1] += static_cast<T>(s * dx);
              dst[(i + 1) * w + j] += static_cast<T>(s * dy);
              dst[i * w + j] -= static_cast<T>(s * (dx + dy));
            }
          }
        }
      });
}

template <typename T>
Var<T> generator_objective(Var<T> adv, Var<T> cls, Var<T> tv, const LossWeights& w) {
  for (Var<T> v : {adv, cls, tv}) {
    if (v.value().numel() != 1) throw ShapeError("generator_objective takes scalar components");
  }
  return add(add(adv, scale(cls, w.lambda_cls)), scale(tv, w.lambda_tv));
}

double generator_objective_value(double adv, double cls, double tv, const LossWeights& w) {
  return adv + w.lambda_cls * cls + w.lambda_tv * tv;
}

#define GATEDGAN_INSTANTIATE_LOSSES(T)                                      \
  template Var<T> lsgan_d_loss(Var<T>, Var<T>);                             \
  template Var<T> lsgan_g_loss(Var<T>);                                     \
  template Var<T> reconstruction_loss(Var<T>, Var<T>);                      \
  template Var<T> classifier_loss_real(Var<T>, std::size_t);                \
  template Var<T> classifier_loss_generated(Var<T>, std::size_t);           \
  template Var<T> tv_loss(Var<T>, double);                                  \
  template Var<T> generator_objective(Var<T>, Var<T>, Var<T>, const LossWeights&);

GATEDGAN_INSTANTIATE_LOSSES(float)
GATEDGAN_INSTANTIATE_LOSSES(double)

}  // namespace gatedgan
