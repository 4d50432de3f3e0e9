#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace gatedgan;
using gatedgan::testing::random_tensor;

namespace {

TensorD ones(const Shape& s) { return TensorD(s, 1.0); }

TensorD eval_conv(const TensorD& x, const TensorD& k, const TensorD& b, std::size_t stride,
                  Padding pad) {
  Tape<double> tape;
  return conv2d(tape.constant(x), tape.constant(k), tape.constant(b), stride, pad).value();
}

TensorD eval_conv_t(const TensorD& x, const TensorD& k, const TensorD& b) {
  Tape<double> tape;
  return conv2d_transpose(tape.constant(x), tape.constant(k), tape.constant(b)).value();
}

// Scatter every input pixel through the kernel onto the doubled grid.
TensorD conv_t_oracle(const TensorD& x, const TensorD& k, const TensorD& b) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3), co = k.dim(1);
  TensorD out({n, co, 2 * h, 2 * w});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < 2 * h; ++y)
        for (std::size_t z = 0; z < 2 * w; ++z) out.at(s, o, y, z) = b[o];
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z)
          for (std::size_t o = 0; o < co; ++o)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long oy = long(2 * y + ky) - 1, ox = long(2 * z + kx) - 1;
                if (oy < 0 || ox < 0 || oy >= long(2 * h) || ox >= long(2 * w)) continue;
                out.at(s, o, oy, ox) += x.at(s, i, y, z) * k[((i * co + o) * 3 + ky) * 3 + kx];
              }
  return out;
}

double dot(const TensorD& a, const TensorD& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("tensor shape contracts") {
  CHECK_THROWS_AS(TensorD(Shape{2, 0}), ShapeError);
  CHECK_THROWS_AS(TensorD(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  TensorD t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
  CHECK(TensorD::scalar(2.5).item() == 2.5);
}

TEST_CASE("tensor storage is 64-byte aligned") {
  for (std::size_t n : {1u, 3u, 17u, 1000u}) {
    const TensorF f({n}, 1.f);
    const TensorD d({n}, std::vector<double>(n, 2.0));
    CHECK(reinterpret_cast<std::uintptr_t>(f.data().data()) % 64 == 0);
    CHECK(reinterpret_cast<std::uintptr_t>(d.data().data()) % 64 == 0);
    CHECK(reinterpret_cast<std::uintptr_t>(d.cast<float>().data().data()) % 64 == 0);
  }
}

TEST_CASE("bit_identical separates signed zeros") {
  TensorD a({1}, 0.0), b({1}, -0.0);
  CHECK(a == b);
  CHECK_FALSE(bit_identical(a, b));
  CHECK(tensor_digest(a) != tensor_digest(b));
}

TEST_CASE("batch stacking round trip") {
  std::mt19937_64 rng(3);
  std::vector<TensorF> items{random_tensor<float>({1, 2, 3, 3}, rng),
                             random_tensor<float>({1, 2, 3, 3}, rng)};
  TensorF batch = stack_batch<float>(items);
  CHECK(batch.shape() == Shape{2, 2, 3, 3});
  CHECK(bit_identical(batch_item(batch, 1), items[1]));
}

TEST_CASE("conv2d examples") {
  SUBCASE("sum of nine ones") {
    TensorD y = eval_conv(ones({1, 1, 3, 3}), ones({1, 1, 3, 3}), TensorD({1}), 1, {});
    REQUIRE(y.shape() == Shape{1, 1, 1, 1});
    CHECK(y[0] == 9.0);
  }
  SUBCASE("identity kernel") {
    std::mt19937_64 rng(1);
    TensorD x = random_tensor({2, 1, 5, 4}, rng);
    CHECK(eval_conv(x, ones({1, 1, 1, 1}), TensorD({1}), 1, {}) == x);
  }
  SUBCASE("disjoint windows") {
    TensorD y = eval_conv(ones({1, 1, 4, 4}), ones({1, 1, 2, 2}), TensorD({1}), 2, {});
    CHECK(y == TensorD({1, 1, 2, 2}, 4.0));
  }
  SUBCASE("output extent") {
    TensorD y = eval_conv(ones({1, 2, 9, 7}), ones({3, 2, 4, 4}), TensorD({3}), 2,
                          {PadMode::zero, 1});
    CHECK(y.shape() == Shape{1, 3, 4, 3});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(eval_conv(ones({1, 2, 4, 4}), ones({1, 3, 3, 3}), TensorD({1}), 1, {}),
                    ShapeError);
    CHECK_THROWS_AS(eval_conv(ones({1, 1, 2, 2}), ones({1, 1, 3, 3}), TensorD({1}), 1, {}),
                    ArgumentError);
    CHECK_THROWS_AS(eval_conv(ones({1, 1, 3, 3}), ones({1, 1, 3, 3}), TensorD({1}), 1,
                              {PadMode::reflect, 3}),
                    ArgumentError);
  }
}

TEST_CASE("reflect padding mirrors without repeating the edge") {
  Tape<double> tape;
  TensorD x({1, 1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  TensorD y = pad2d(tape.constant(x), {PadMode::reflect, 1}).value();
  REQUIRE(y.shape() == Shape{1, 1, 4, 5});
  CHECK(y.at(0, 0, 1, 0) == 2.0);
  CHECK(y.at(0, 0, 1, 4) == 2.0);
  CHECK(y.at(0, 0, 0, 1) == 4.0);
  CHECK(y.at(0, 0, 3, 3) == 3.0);
  CHECK_THROWS_AS(pad2d(tape.constant(TensorD({1, 1, 1, 3})), {PadMode::reflect, 1}), ArgumentError);
}

TEST_CASE("conv2d_transpose examples") {
  std::mt19937_64 rng(11);
  SUBCASE("shape contract") {
    TensorD y = eval_conv_t(random_tensor({1, 64, 8, 8}, rng), random_tensor({64, 32, 3, 3}, rng),
                            TensorD({32}));
    CHECK(y.shape() == Shape{1, 32, 16, 16});
  }
  SUBCASE("zero kernel gives the bias") {
    TensorD b({2}, std::vector<double>{0.5, -1.5});
    TensorD y = eval_conv_t(random_tensor({1, 3, 4, 4}, rng), TensorD({3, 2, 3, 3}), b);
    for (std::size_t i = 0; i < 64; ++i) CHECK(y[i] == 0.5);
    for (std::size_t i = 64; i < 128; ++i) CHECK(y[i] == -1.5);
  }
  SUBCASE("matches direct summation") {
    for (int trial = 0; trial < 5; ++trial) {
      TensorD x = random_tensor({2, 3, 2, 3}, rng);
      TensorD k = random_tensor({3, 4, 3, 3}, rng);
      TensorD b = random_tensor({4}, rng);
      TensorD got = eval_conv_t(x, k, b), want = conv_t_oracle(x, k, b);
      REQUIRE(got.shape() == want.shape());
      for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
  SUBCASE("adjoint of the stride-2 convolution") {
    for (int trial = 0; trial < 5; ++trial) {
      TensorD u = random_tensor({1, 3, 4, 4}, rng);   // small grid
      TensorD v = random_tensor({1, 2, 8, 8}, rng);   // doubled grid
      TensorD k = random_tensor({3, 2, 3, 3}, rng);
      const double lhs = dot(eval_conv_t(u, k, TensorD({2})), v);
      const double rhs = dot(u, eval_conv(v, k, TensorD({3}), 2, {PadMode::zero, 1}));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("instance_normalize examples") {
  Tape<double> tape;
  auto norm = [&](const TensorD& x, double g, double b, double eps = kInstanceNormEps) {
    const std::size_t c = x.dim(1);
    return instance_normalize(tape.constant(x), tape.constant(TensorD({c}, g)),
                              tape.constant(TensorD({c}, b)), eps)
        .value();
  };
  CHECK(norm(TensorD({1, 2, 3, 3}, 4.2), 1.0, 0.0) == TensorD({1, 2, 3, 3}, 0.0));
  TensorD pair = norm(TensorD({1, 1, 1, 2}, std::vector<double>{1, 3}), 1.0, 0.0, 1e-12);
  CHECK(pair[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(pair[1] == doctest::Approx(1.0).epsilon(1e-9));
  std::mt19937_64 rng(2);
  CHECK(norm(random_tensor({2, 3, 4, 4}, rng), 0.0, 5.0) == TensorD({2, 3, 4, 4}, 5.0));
  CHECK_THROWS_AS(norm(TensorD({1, 1, 2, 2}), 1.0, 0.0, 0.0), ArgumentError);
}

TEST_CASE("activation examples") {
  Tape<double> tape;
  TensorD x({3}, std::vector<double>{-2.0, 3.0, -1.0});
  TensorD r = relu(tape.constant(x)).value();
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 3.0);
  CHECK(leaky_relu(tape.constant(x)).value()[2] == doctest::Approx(-0.2));
  CHECK(tanh(tape.constant(TensorD({1}, 0.0))).value()[0] == 0.0);
  std::mt19937_64 rng(5);
  TensorD t = tanh(tape.constant(random_tensor({100}, rng, 3.0))).value();
  for (double v : t.storage()) CHECK(std::abs(v) < 1.0);
}

TEST_CASE("elementwise and reduction examples") {
  Tape<double> tape;
  std::mt19937_64 rng(6);
  TensorD x = random_tensor({2, 3}, rng);
  CHECK(add(tape.constant(x), tape.constant(TensorD({2, 3}))).value() == x);
  CHECK(mean(tape.constant(TensorD({4}, std::vector<double>{1, 2, 3, 6}))).value().item() == 3.0);
  CHECK_THROWS_AS(add(tape.constant(x), tape.constant(TensorD({3, 2}))), ShapeError);
}

TEST_CASE("softmax cross entropy examples") {
  Tape<double> tape;
  auto ce = [&](std::vector<double> logits, std::size_t c) {
    const std::size_t k = logits.size();
    return softmax_cross_entropy(tape.constant(TensorD({k}, std::move(logits))), c).value().item();
  };
  CHECK(ce({50.0, -50.0, -50.0}, 0) < 1e-12);
  CHECK(ce({0, 0, 0, 0}, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(ce({1, 0}, 0) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-14));
  CHECK(ce({1, 0}, 0) == doctest::Approx(0.313262).epsilon(1e-6));
  CHECK_THROWS_AS(ce({1, 0}, 2), IndexError);
  CHECK_THROWS_AS(ce({1}, 0), ArgumentError);
  TensorD p = softmax(TensorD({2, 3}, std::vector<double>{1, 2, 3, -1, 0, 7}));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  CHECK(p[3] + p[4] + p[5] == doctest::Approx(1.0));
}

TEST_CASE("backward examples") {
  std::mt19937_64 rng(8);
  TensorD xv = random_tensor({3, 4}, rng), tv = random_tensor({3, 4}, rng);
  SUBCASE("sum gives ones") {
    Tape<double> tape;
    Var<double> x = tape.variable(xv);
    tape.backward(sum(x));
    CHECK(*tape.grad(x) == TensorD({3, 4}, 1.0));
  }
  SUBCASE("mean squared error") {
    Tape<double> tape;
    Var<double> x = tape.variable(xv);
    tape.backward(mean(square(sub(x, tape.constant(tv)))));
    const TensorD& g = *tape.grad(x);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      CHECK(g[i] == doctest::Approx(2.0 * (xv[i] - tv[i]) / 12.0).epsilon(1e-14));
    }
  }
  SUBCASE("constants receive no gradient") {
    Tape<double> tape;
    Var<double> c = tape.constant(xv);
    Var<double> x = tape.variable(tv);
    tape.backward(sum(mul(c, x)));
    CHECK(tape.grad(c) == nullptr);
    CHECK(*tape.grad(x) == xv);
  }
  SUBCASE("repeated backward does not accumulate") {
    Tape<double> tape;
    Var<double> x = tape.variable(xv);
    Var<double> loss = sum(x);
    tape.backward(loss);
    tape.backward(loss);
    CHECK(*tape.grad(x) == TensorD({3, 4}, 1.0));
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape<double> tape;
    CHECK_THROWS_AS(tape.backward(tape.variable(xv)), ShapeError);
  }
}

TEST_CASE("non-finite values are reported") {
  Tape<double> tape;
  Var<double> x = tape.variable(TensorD({2}, std::numeric_limits<double>::max()));
  CHECK_THROWS_AS(square(x), NumericError);
}

TEST_CASE("grad_check examples") {
  std::mt19937_64 rng(9);
  SUBCASE("sum is exact") {
    GradCheckReport r = grad_check([](Tape<double>&, std::span<const Var<double>> v) { return sum(v[0]); },
                                   {random_tensor({2, 3}, rng)}, 1e-4);
    CHECK(r.passed);
    CHECK(r.max_absolute_error < 1e-9);
  }
  SUBCASE("conv, norm, relu, mean chain") {
    GradCheckReport r = grad_check(
        [](Tape<double>& t, std::span<const Var<double>> v) {
          std::mt19937_64 g(4);
          Var<double> k = t.constant(random_tensor({3, 2, 3, 3}, g, 0.5));
          Var<double> b = t.constant(random_tensor({3}, g));
          Var<double> y = conv2d(v[0], k, b, 1, {PadMode::zero, 1});
          y = instance_normalize(y, t.constant(TensorD({3}, 1.0)), t.constant(TensorD({3}, 0.3)));
          return mean(mul(relu(y), t.constant(random_tensor({1, 3, 5, 5}, g))));
        },
        {random_tensor({1, 2, 5, 5}, rng)}, 1e-4, 1e-5);
    CHECK(r.passed);
  }
  SUBCASE("corrupted gradient is caught") {
    // Forward is x^2 but the recorded backward claims 3x.
    GradCheckReport r = grad_check(
        [](Tape<double>& t, std::span<const Var<double>> v) {
          const TensorD& xv = v[0].value();
          TensorD y = xv;
          for (auto& e : y.storage()) e *= e;
          Var<double> sq = t.record(std::move(y), {v[0]},
                                    [id = v[0].id, xv](Tape<double>& tp, const TensorD& g) {
                                      if (TensorD* dst = tp.grad_target(id))
                                        for (std::size_t i = 0; i < g.numel(); ++i)
                                          (*dst)[i] += 3.0 * xv[i] * g[i];
                                    });
          return sum(sq);
        },
        {random_tensor({4}, rng)}, 1e-4);
    CHECK_FALSE(r.passed);
    CHECK(r.max_relative_error > 0.1);
  }
}

TEST_CASE("every op and loss passes the finite difference check") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& c : gatedgan::testing::gradient_cases(seed)) {
      CAPTURE(c.name);
      CAPTURE(seed);
      GradCheckReport r = grad_check(c.f, c.inputs, gatedgan::testing::kGradTol,
                                     gatedgan::testing::kGradStep);
      CHECK(r.max_relative_error < gatedgan::testing::kGradTol);
    }
  }
}
