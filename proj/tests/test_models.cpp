#include <algorithm>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "gatedgan/models.hpp"

using namespace gatedgan;
using gatedgan::testing::random_tensor;

namespace {

GeneratorParams<float> small_generator(std::size_t k, std::uint64_t seed = 1,
                                       std::size_t depth = 1) {
  std::mt19937_64 rng(seed);
  return GeneratorParams<float>::initialize({k, 0.25, depth}, rng);
}

TensorF image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  TensorF x({1, 3, h, w});
  for (auto& v : x.storage()) v = u(rng);
  return x;
}

bool in_open_unit(const TensorF& t) {
  return std::all_of(t.storage().begin(), t.storage().end(),
                     [](float v) { return v > -1.f && v < 1.f; });
}

}  // namespace

TEST_CASE("encoder shape contract") {
  std::mt19937_64 rng(2);
  const auto full = GeneratorParams<float>::initialize({1, 1.0, 1}, rng);
  CHECK(encode(full, image(32, 32, 1)).shape() == Shape{1, 128, 8, 8});
  CHECK(encode(full, image(128, 128, 1)).shape() == Shape{1, 128, 32, 32});
  const auto p = small_generator(2);
  CHECK(bit_identical(encode(p, image(32, 32, 3)), encode(p, image(32, 32, 3))));
  CHECK_THROWS_AS(encode(p, image(30, 32, 3)), ShapeError);
  CHECK_THROWS_AS(encode(p, TensorF({1, 1, 32, 32})), ShapeError);
}

TEST_CASE("decoder shape contract and range") {
  std::mt19937_64 rng(3);
  const auto full = GeneratorParams<float>::initialize({1, 1.0, 1}, rng);
  std::mt19937_64 frng(4);
  const TensorF f = random_tensor<float>({1, 128, 8, 8}, frng);
  const TensorF y = decode(full, f);
  CHECK(y.shape() == Shape{1, 3, 32, 32});
  CHECK(in_open_unit(y));
  CHECK(bit_identical(y, decode(full, f)));
  CHECK(decode(full, random_tensor<float>({1, 128, 32, 32}, frng)).shape() == Shape{1, 3, 128, 128});
  CHECK_THROWS_AS(decode(full, random_tensor<float>({1, 64, 8, 8}, frng)), ShapeError);
}

TEST_CASE("gate endpoints select one branch") {
  const auto p = small_generator(3, 5, 2);
  const TensorF f = encode(p, image(16, 16, 7));
  for (std::size_t c = 0; c < 3; ++c) {
    Tape<float> tape;
    ParamBinder<float> bind(tape);
    const TensorF alone = branch_forward(bind, p, c, tape.constant(f)).value();
    CHECK(bit_identical(transform(p, f, StyleWeights::one_hot(c, 3)), alone));
  }
}

TEST_CASE("identical branches make the gate irrelevant") {
  auto p = small_generator(3, 6);
  p.branches[1] = p.branches[0];
  p.branches[2] = p.branches[0];
  const TensorF f = encode(p, image(16, 16, 8));
  const TensorF a = transform(p, f, StyleWeights::one_hot(0, 3));
  const TensorF b = transform(p, f, StyleWeights({0.2, 0.5, 0.3}));
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-5));
}

TEST_CASE("zero branch kernels pass features through") {
  auto p = small_generator(2, 7);
  for (auto& block : p.branches[1]) {
    for (auto* cn : {&block.first, &block.second}) {
      std::fill(cn->conv.weight.storage().begin(), cn->conv.weight.storage().end(), 0.f);
    }
  }
  const TensorF f = encode(p, image(16, 16, 9));
  CHECK(bit_identical(transform(p, f, StyleWeights::one_hot(1, 2)), f));
}

TEST_CASE("generator forward") {
  const auto p = small_generator(2, 8);
  for (std::size_t h : {4u, 8u, 20u, 32u}) {
    const TensorF x = image(h, h + 4, h);
    const TensorF y = generate(p, x, 0);
    CHECK(y.shape() == x.shape());
    CHECK(in_open_unit(y));
  }
  const TensorF x = image(16, 16, 10);
  CHECK(l1_distance(generate(p, x, 0), generate(p, x, 1)) > 0.f);
  CHECK(reconstruct_image(p, x).shape() == x.shape());
  CHECK_THROWS_AS(generate(p, x, 2), IndexError);
}

TEST_CASE("style weights") {
  CHECK_THROWS_AS(StyleWeights({0.5, 0.6}), ArgumentError);
  CHECK_THROWS_AS(StyleWeights({1.5, -0.5}), ArgumentError);
  CHECK_THROWS_AS(StyleWeights({}), ArgumentError);
  CHECK_THROWS_AS(StyleWeights::one_hot(3, 3), IndexError);
  CHECK_THROWS_AS(StyleWeights::mix(0, 1, 1.5, 2), ArgumentError);
  const StyleWeights w = StyleWeights::mix(2, 0, 0.25, 3);
  CHECK(w[2] == 0.25);
  CHECK(w[0] == 0.75);
  CHECK(w[1] == 0.0);
}

TEST_CASE("blending is continuous in alpha") {
  const auto p = small_generator(2, 12);
  const TensorF x = image(16, 16, 13);
  auto at = [&](double a) { return generate_blend(p, x, StyleWeights::mix(0, 1, a, 2)); };
  const double lipschitz =
      std::max(l1_distance(at(0.0), at(0.5)), l1_distance(at(0.5), at(1.0))) / 0.5;
  for (int i = 0; i < 10; ++i) {
    const double a = 0.1 * i;
    CHECK(l1_distance(at(a), at(a + 0.1)) <= 2.0 * 0.1 * lipschitz);
  }
  const double d1 = l1_distance(at(0.3), at(0.4));
  const double d2 = l1_distance(at(0.3), at(0.31));
  const double d3 = l1_distance(at(0.3), at(0.301));
  CHECK(d2 < d1);
  CHECK(d3 < d2);
}

TEST_CASE("parameter count is linear in the number of styles") {
  const std::size_t one = small_generator(1).parameter_count();
  const std::size_t branch = small_generator(1).branch_parameter_count();
  for (std::size_t k = 2; k <= 5; ++k) CHECK(small_generator(k).parameter_count() == one + (k - 1) * branch);
  auto p = small_generator(2, 3);
  const std::size_t before = p.parameter_count();
  std::mt19937_64 rng(4);
  CHECK(p.add_branch(rng) == 2);
  CHECK(p.parameter_count() == before + branch);
  CHECK(p.style_count() == 3);
}

TEST_CASE("parameter names are unique") {
  const auto p = small_generator(3, 1, 2);
  std::vector<std::string> names;
  p.visit(ConstParamVisitor<float>([&](const std::string& n, const TensorF&) { names.push_back(n); }));
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("discriminator heads") {
  std::mt19937_64 rng(5);
  const auto full = DiscriminatorParams<float>::initialize({4, 1.0, 1}, rng);
  Tape<float> tape;
  ParamBinder<float> bind(tape);
  const auto out = discriminate_and_classify(bind, full, tape.constant(image(128, 128, 3)));
  CHECK(out.scores.shape()[1] == 1);
  CHECK(out.scores.shape()[2] >= 1);
  CHECK(out.class_logits.shape()[1] == 4);
  CHECK(out.pooled_logits.shape() == Shape{1, 4});
  CHECK(bit_identical(patch_scores(full, image(128, 128, 3)), out.scores.value()));

  const auto small = DiscriminatorParams<float>::initialize({3, 0.25, 1}, rng);
  const ClassPrediction pred = classify_style(small, image(16, 16, 4));
  CHECK(pred.labels.size() == 1);
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += pred.pooled_distribution[i];
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("adding a classifier class keeps existing rows") {
  std::mt19937_64 rng(6);
  auto d = DiscriminatorParams<float>::initialize({2, 0.25, 1}, rng);
  const TensorF w = d.cls_head.weight, b = d.cls_head.bias;
  const std::size_t before = d.parameter_count();
  d.add_class(rng);
  CHECK(d.style_count() == 3);
  CHECK(d.parameter_count() == before + w.numel() / 2 + 1);
  for (std::size_t i = 0; i < w.numel(); ++i) CHECK(d.cls_head.weight[i] == w[i]);
  for (std::size_t i = 0; i < b.numel(); ++i) CHECK(d.cls_head.bias[i] == b[i]);
}

TEST_CASE("receptive field") {
  const std::vector<LayerSpec> single{{LayerKind::conv, 4, 2, 1}};
  CHECK(receptive_field(single) == 4);
  CHECK(probe_receptive_field(single, 16) == 4);
  const std::vector<LayerSpec> two{{LayerKind::conv, 3, 1, 1}, {LayerKind::conv, 3, 1, 1}};
  CHECK(receptive_field(two) == 5);
  CHECK(probe_receptive_field(two, 16) == 5);
  CHECK(receptive_field(discriminator_layers()) == 70);
  CHECK_THROWS_AS(receptive_field({{LayerKind::conv_transpose, 3, 2, 1}}), ArgumentError);
}

TEST_CASE("a pixel only reaches outputs whose window covers it") {
  const auto layers = discriminator_layers();
  const std::size_t extent = 96;
  for (auto [y, x] : {std::pair<std::size_t, std::size_t>{0, 0}, {40, 17}, {95, 60}}) {
    const auto hits = probe_affected_outputs(layers, extent, y, x);
    CHECK_FALSE(hits.empty());
    for (auto [r, c] : hits) {
      const auto wr = receptive_window(layers, r), wc = receptive_window(layers, c);
      CHECK(wr.first <= std::ptrdiff_t(y));
      CHECK(std::ptrdiff_t(y) <= wr.second);
      CHECK(wc.first <= std::ptrdiff_t(x));
      CHECK(std::ptrdiff_t(x) <= wc.second);
    }
  }
}

TEST_CASE("branch visualization") {
  const auto p = small_generator(2, 9);
  const TensorF v = visualize_branch_feature(p, 1, 3, 1.0, 3, 5);
  CHECK(v.shape() == Shape{1, 3, 12, 12});
  CHECK(bit_identical(v, visualize_branch_feature(p, 1, 3, 1.0, 3, 5)));
  // With freshly initialized norm offsets a zero feature map stays zero
  // through the branch.
  const TensorF zero = visualize_branch_feature(p, 0, 0, 0.0, 2, 1);
  CHECK(bit_identical(zero, decode(p, TensorF({1, p.feature_channels(), 2, 2}))));
  CHECK_THROWS_AS(visualize_branch_feature(p, 2, 0, 1.0, 3, 1), IndexError);
  CHECK_THROWS_AS(visualize_branch_feature(p, 0, p.feature_channels(), 1.0, 3, 1), IndexError);
  CHECK_THROWS_AS(visualize_branch_feature(p, 0, 0, 1.0, 0, 1), ArgumentError);
}
