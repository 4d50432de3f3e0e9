#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gatedgan/grad_check.hpp"
#include "gatedgan/losses.hpp"

namespace gatedgan::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
  return t;
}

/// Random values with magnitude at least `margin`, keeping finite differences
/// away from the kinks of abs and relu.
inline TensorD away_from_zero(const Shape& shape, std::mt19937_64& rng, double margin = 0.1) {
  TensorD t = random_tensor(shape, rng);
  for (auto& v : t.storage()) v = std::copysign(margin + std::abs(v), v);
  return t;
}

inline TensorD image_like(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.9, 0.9);
  TensorD t(shape);
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

// Image whose neighbouring differences all exceed `gap`, so the smoothed
// square root in the TV term stays in its well-conditioned range.
inline TensorD rough_image(const Shape& shape, std::mt19937_64& rng, double gap = 0.05) {
  std::uniform_real_distribution<double> step(gap, 2.0 * gap);
  std::bernoulli_distribution flip(0.5);
  const std::size_t h = shape[2], w = shape[3];
  TensorD t(shape);
  for (std::size_t n = 0; n < shape[0]; ++n)
    for (std::size_t c = 0; c < shape[1]; ++c) {
      std::vector<double> rows(h, 0.0), cols(w, 0.0);
      for (std::size_t y = 1; y < h; ++y) rows[y] = rows[y - 1] + (flip(rng) ? 1 : -1) * step(rng);
      for (std::size_t x = 1; x < w; ++x) cols[x] = cols[x - 1] + (flip(rng) ? 1 : -1) * step(rng);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) t.at(n, c, y, x) = rows[y] + cols[x];
    }
  return t;
}

struct GradCase {
  std::string name;
  ScalarFunction f;
  std::vector<TensorD> inputs;
};

/// Weighted sum of all outputs so every output element gets a distinct
/// upstream gradient.
inline Var<double> project(Tape<double>& tape, Var<double> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, tape.constant(random_tensor(y.shape(), rng))));
}

/// Every differentiable op and every loss, with inputs drawn from `seed`.
inline std::vector<GradCase> gradient_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t ps = seed * 7919 + 1;
  using Vs = std::span<const Var<double>>;
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, ScalarFunction f, std::vector<TensorD> in) {
    cases.push_back({std::move(name), std::move(f), std::move(in)});
  };
  const Shape s{2, 3, 4, 4};

  add_case("add", [ps](Tape<double>& t, Vs v) { return project(t, add(v[0], v[1]), ps); },
           {random_tensor(s, rng), random_tensor(s, rng)});
  add_case("sub", [ps](Tape<double>& t, Vs v) { return project(t, sub(v[0], v[1]), ps); },
           {random_tensor(s, rng), random_tensor(s, rng)});
  add_case("mul", [ps](Tape<double>& t, Vs v) { return project(t, mul(v[0], v[1]), ps); },
           {random_tensor(s, rng), random_tensor(s, rng)});
  add_case("scale", [ps](Tape<double>& t, Vs v) { return project(t, scale(v[0], -1.7), ps); },
           {random_tensor(s, rng)});
  add_case("add_scalar",
           [ps](Tape<double>& t, Vs v) { return project(t, add_scalar(v[0], 0.3), ps); },
           {random_tensor(s, rng)});
  add_case("square", [ps](Tape<double>& t, Vs v) { return project(t, square(v[0]), ps); },
           {random_tensor(s, rng)});
  add_case("abs", [ps](Tape<double>& t, Vs v) { return project(t, abs(v[0]), ps); },
           {away_from_zero(s, rng)});
  add_case("sum", [](Tape<double>&, Vs v) { return sum(square(v[0])); }, {random_tensor(s, rng)});
  add_case("mean", [](Tape<double>&, Vs v) { return mean(square(v[0])); }, {random_tensor(s, rng)});
  add_case("relu", [ps](Tape<double>& t, Vs v) { return project(t, relu(v[0]), ps); },
           {away_from_zero(s, rng)});
  add_case("leaky_relu", [ps](Tape<double>& t, Vs v) { return project(t, leaky_relu(v[0]), ps); },
           {away_from_zero(s, rng)});
  add_case("tanh", [ps](Tape<double>& t, Vs v) { return project(t, tanh(v[0]), ps); },
           {random_tensor(s, rng)});
  add_case("pad2d_zero",
           [ps](Tape<double>& t, Vs v) { return project(t, pad2d(v[0], {PadMode::zero, 2}), ps); },
           {random_tensor(s, rng)});
  add_case("pad2d_reflect",
           [ps](Tape<double>& t, Vs v) { return project(t, pad2d(v[0], {PadMode::reflect, 3}), ps); },
           {random_tensor({1, 2, 5, 4}, rng)});
  add_case("conv2d_stride1_zero",
           [ps](Tape<double>& t, Vs v) {
             return project(t, conv2d(v[0], v[1], v[2], 1, {PadMode::zero, 1}), ps);
           },
           {random_tensor({2, 3, 5, 5}, rng), random_tensor({4, 3, 3, 3}, rng, 0.5),
            random_tensor({4}, rng)});
  add_case("conv2d_stride2_k4",
           [ps](Tape<double>& t, Vs v) {
             return project(t, conv2d(v[0], v[1], v[2], 2, {PadMode::zero, 1}), ps);
           },
           {random_tensor({1, 2, 8, 8}, rng), random_tensor({3, 2, 4, 4}, rng, 0.5),
            random_tensor({3}, rng)});
  add_case("conv2d_reflect_k7",
           [ps](Tape<double>& t, Vs v) {
             return project(t, conv2d(v[0], v[1], v[2], 1, {PadMode::reflect, 3}), ps);
           },
           {random_tensor({1, 2, 6, 6}, rng), random_tensor({2, 2, 7, 7}, rng, 0.3),
            random_tensor({2}, rng)});
  add_case("conv2d_transpose",
           [ps](Tape<double>& t, Vs v) { return project(t, conv2d_transpose(v[0], v[1], v[2]), ps); },
           {random_tensor({2, 3, 3, 3}, rng), random_tensor({3, 2, 3, 3}, rng, 0.5),
            random_tensor({2}, rng)});
  add_case("instance_normalize",
           [ps](Tape<double>& t, Vs v) {
             return project(t, instance_normalize(v[0], v[1], v[2]), ps);
           },
           {random_tensor({2, 3, 4, 4}, rng), random_tensor({3}, rng), random_tensor({3}, rng)});
  add_case("spatial_mean",
           [ps](Tape<double>& t, Vs v) { return project(t, spatial_mean(v[0]), ps); },
           {random_tensor(s, rng)});
  add_case("softmax_cross_entropy",
           [](Tape<double>&, Vs v) { return softmax_cross_entropy(v[0], 2); },
           {random_tensor({3, 4}, rng)});

  add_case("lsgan_d_loss", [](Tape<double>&, Vs v) { return lsgan_d_loss(v[0], v[1]); },
           {random_tensor({2, 1, 3, 3}, rng), random_tensor({2, 1, 3, 3}, rng)});
  add_case("lsgan_g_loss", [](Tape<double>&, Vs v) { return lsgan_g_loss(v[0]); },
           {random_tensor({2, 1, 3, 3}, rng)});
  {
    TensorD x = image_like({1, 3, 4, 4}, rng);
    TensorD delta = away_from_zero({1, 3, 4, 4}, rng, 0.05);
    TensorD x_hat = x;
    for (std::size_t i = 0; i < x_hat.numel(); ++i) x_hat[i] += delta[i];
    add_case("reconstruction_loss",
             [](Tape<double>&, Vs v) { return reconstruction_loss(v[0], v[1]); },
             {std::move(x), std::move(x_hat)});
  }
  add_case("classifier_loss_real",
           [](Tape<double>&, Vs v) { return classifier_loss_real(v[0], 1); },
           {random_tensor({2, 3}, rng)});
  add_case("classifier_loss_generated",
           [](Tape<double>&, Vs v) { return classifier_loss_generated(v[0], 0); },
           {random_tensor({2, 3}, rng)});
  add_case("tv_loss", [](Tape<double>&, Vs v) { return tv_loss(v[0]); },
           {rough_image({1, 3, 5, 5}, rng, 0.4)});
  add_case("generator_objective",
           [](Tape<double>&, Vs v) {
             return generator_objective(sum(square(v[0])), sum(v[1]), sum(abs(v[2])),
                                        LossWeights{1.3, 0.7, 10.0});
           },
           {random_tensor({3}, rng), random_tensor({3}, rng), away_from_zero({3}, rng)});
  return cases;
}

inline constexpr double kGradStep = 1e-3;
inline constexpr double kGradTol = 1e-4;

}  // namespace gatedgan::testing
