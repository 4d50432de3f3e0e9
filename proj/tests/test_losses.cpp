#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace gatedgan;
using gatedgan::testing::random_tensor;

namespace {

double value(Var<double> v) { return v.value().item(); }

TensorD scores(double v) { return TensorD({2, 1, 3, 3}, v); }

}  // namespace

TEST_CASE("lsgan discriminator loss") {
  Tape<double> t;
  CHECK(value(lsgan_d_loss(t.constant(scores(1.0)), t.constant(scores(0.0)))) == 0.0);
  CHECK(value(lsgan_d_loss(t.constant(scores(0.5)), t.constant(scores(0.5)))) == 0.5);
  CHECK(value(lsgan_d_loss(t.constant(scores(0.0)), t.constant(scores(1.0)))) == 2.0);
}

TEST_CASE("lsgan generator loss") {
  Tape<double> t;
  CHECK(value(lsgan_g_loss(t.constant(scores(1.0)))) == 0.0);
  CHECK(value(lsgan_g_loss(t.constant(scores(0.0)))) == 1.0);
  CHECK(value(lsgan_g_loss(t.constant(scores(-1.0)))) == 4.0);
}

TEST_CASE("reconstruction loss") {
  Tape<double> t;
  std::mt19937_64 rng(1);
  TensorD x = random_tensor({1, 3, 4, 4}, rng);
  CHECK(value(reconstruction_loss(t.constant(x), t.constant(x))) == 0.0);
  CHECK(value(reconstruction_loss(t.constant(TensorD({1, 3, 4, 4}, 0.0)),
                                  t.constant(TensorD({1, 3, 4, 4}, 1.0)))) == 1.0);
  CHECK_THROWS_AS(reconstruction_loss(t.constant(x), t.constant(TensorD({1, 3, 4, 5}))), ShapeError);
}

TEST_CASE("classifier losses") {
  Tape<double> t;
  auto logits = [&](std::vector<double> v) {
    const std::size_t k = v.size();
    return t.constant(TensorD({1, k}, std::move(v)));
  };
  CHECK(value(classifier_loss_real(logits({-40, 40, -40}), 1)) < 1e-12);
  CHECK(value(classifier_loss_real(logits({0, 0, 0, 0}), 3)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(value(classifier_loss_real(logits({1, 0}), 0)) == doctest::Approx(0.313262).epsilon(1e-6));
  CHECK(value(classifier_loss_generated(logits({0, 0, 0}), 1)) ==
        doctest::Approx(1.098612).epsilon(1e-6));
  CHECK(value(classifier_loss_generated(logits({1, 0}), 0)) ==
        value(classifier_loss_real(logits({1, 0}), 0)));
  CHECK_THROWS_AS(classifier_loss_real(logits({1, 0}), 2), IndexError);
}

TEST_CASE("total variation") {
  Tape<double> t;
  SUBCASE("constant image") {
    const double v = value(tv_loss(t.constant(TensorD({1, 3, 32, 32}, 0.4))));
    CHECK(v == doctest::Approx(3 * 31 * 31 * std::sqrt(kTvEpsilon)).epsilon(1e-12));
  }
  SUBCASE("single interior term") {
    const double a = value(tv_loss(t.constant(TensorD({1, 1, 2, 2}, std::vector<double>{0, 1, 0, 1}))));
    CHECK(a == doctest::Approx(std::sqrt(1.0 + kTvEpsilon)).epsilon(1e-14));
    const double b = value(tv_loss(t.constant(TensorD({1, 1, 2, 2}, std::vector<double>{0, 1, 1, 0}))));
    CHECK(b == doctest::Approx(std::sqrt(2.0 + kTvEpsilon)).epsilon(1e-14));
  }
  SUBCASE("direct evaluation on random images") {
    std::mt19937_64 rng(3);
    TensorD x = random_tensor({2, 3, 5, 6}, rng);
    double want = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i + 1 < 5; ++i)
          for (std::size_t j = 0; j + 1 < 6; ++j) {
            const double dx = x.at(n, c, i, j + 1) - x.at(n, c, i, j);
            const double dy = x.at(n, c, i + 1, j) - x.at(n, c, i, j);
            want += std::sqrt(dx * dx + dy * dy + kTvEpsilon);
          }
    CHECK(value(tv_loss(t.constant(x))) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("generator objective") {
  Tape<double> t;
  const LossWeights w{1.0, 1e-6, 10.0};
  auto obj = [&](double a, double c, double v, const LossWeights& lw) {
    return value(generator_objective(t.constant(TensorD::scalar(a)), t.constant(TensorD::scalar(c)),
                                     t.constant(TensorD::scalar(v)), lw));
  };
  CHECK(obj(0.5, std::log(4.0), 100.0, w) == doctest::Approx(1.886394).epsilon(1e-6));
  CHECK(generator_objective_value(0.5, std::log(4.0), 100.0, w) ==
        doctest::Approx(1.886394).epsilon(1e-6));
  LossWeights no_cls = w;
  no_cls.lambda_cls = 0.0;
  CHECK(obj(0.5, 7.0, 100.0, no_cls) == doctest::Approx(0.5 + 1e-4).epsilon(1e-15));
  CHECK(obj(0.0, 0.0, 0.0, w) == 0.0);
}

TEST_CASE("loss weights validation") {
  CHECK_NOTHROW(LossWeights{}.validate());
  CHECK_THROWS_AS((LossWeights{-1.0, 1e-6, 10.0}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{1.0, 1e-6, std::numeric_limits<double>::quiet_NaN()}.validate()),
                  ConfigError);
}
