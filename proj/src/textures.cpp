#include "gatedgan/textures.hpp"

#include <array>
#include <cmath>
#include <algorithm>
#include <random>

namespace gatedgan {
namespace {

using Rgb = std::array<double, 3>;

// One palette for every kind, so kinds differ only in geometry.
constexpr Rgb kDark{-0.5, -0.3, 0.6};
constexpr Rgb kLight{0.6, 0.5, -0.4};

void put(TensorF& t, std::size_t y, std::size_t x, const Rgb& c) {
  for (std::size_t ch = 0; ch < 3; ++ch) t.at(0, ch, y, x) = static_cast<float>(std::clamp(c[ch], -1.0, 1.0));
}

}  // namespace

std::string to_string(TextureKind kind) {
  switch (kind) {
    case TextureKind::checkerboard: return "checkerboard";
    case TextureKind::stripes: return "stripes";
    case TextureKind::dots: return "dots";
  }
  return "unknown";
}

TextureKind parse_texture_kind(const std::string& text) {
  if (text == "checkerboard") return TextureKind::checkerboard;
  if (text == "stripes") return TextureKind::stripes;
  if (text == "dots") return TextureKind::dots;
  throw ArgumentError("unknown texture '" + text + "'");
}

TensorF make_texture(TextureKind kind, std::size_t size, std::uint64_t seed) {
  if (size == 0) throw ArgumentError("texture size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Rgb& a = kDark;
  const Rgb& b = kLight;
  const double period = double(size) / 3.0 * (0.9 + 0.2 * unit(rng));
  const double oy = unit(rng) * period, ox = unit(rng) * period;
  auto inside = [&](double fy, double fx) {
    switch (kind) {
      case TextureKind::checkerboard:
        return (static_cast<long>(std::floor(fy / period)) + static_cast<long>(std::floor(fx / period))) % 2 == 0;
      case TextureKind::stripes:
        return std::fmod(fy + fx, period) < period / 2.0;
      case TextureKind::dots: {
        const double cy = std::fmod(fy, period) - period / 2.0;
        const double cx = std::fmod(fx, period) - period / 2.0;
        return cy * cy + cx * cx < (period * 0.3) * (period * 0.3);
      }
    }
    return false;
  };
  // 4x4 supersampling keeps edges anti-aliased.
  constexpr int kSub = 4;
  TensorF t({1, 3, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx)
          hits += inside(double(y) + (sy + 0.5) / kSub + oy, double(x) + (sx + 0.5) / kSub + ox) ? 1 : 0;
      const double w = double(hits) / (kSub * kSub);
      Rgb c;
      for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = (1 - w) * a[ch] + w * b[ch];
      put(t, y, x, c);
    }
  }
  return t;
}

std::vector<TensorF> texture_collection(TextureKind kind, std::size_t count, std::size_t size,
                                        std::uint64_t seed) {
  std::vector<TensorF> out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_texture(kind, size, rng()));
  return out;
}

TensorF make_content(std::size_t size, std::uint64_t seed) {
  if (size == 0) throw ArgumentError("content size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Rgb top{u(rng), u(rng), u(rng)}, bottom{u(rng), u(rng), u(rng)};
  struct Blob {
    double y, x, r;
    Rgb c;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 4; ++i) {
    blobs.push_back({(u(rng) + 1) / 2 * double(size), (u(rng) + 1) / 2 * double(size),
                     (0.1 + 0.2 * (u(rng) + 1) / 2) * double(size), {u(rng), u(rng), u(rng)}});
  }
  TensorF t({1, 3, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    const double s = size > 1 ? double(y) / double(size - 1) : 0.0;
    for (std::size_t x = 0; x < size; ++x) {
      Rgb c;
      for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = (1 - s) * top[ch] + s * bottom[ch];
      for (const Blob& b : blobs) {
        const double d2 = (double(y) - b.y) * (double(y) - b.y) + (double(x) - b.x) * (double(x) - b.x);
        const double w = std::exp(-d2 / (2 * b.r * b.r));
        for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = (1 - w) * c[ch] + w * b.c[ch];
      }
      put(t, y, x, c);
    }
  }
  return t;
}

}  // namespace gatedgan
