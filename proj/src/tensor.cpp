#include "gatedgan/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace gatedgan {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
bool bit_identical(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

template <typename T>
std::uint64_t tensor_digest(const Tensor<T>& t) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (std::size_t e : t.shape()) {
    const std::uint64_t v = e;
    mix(&v, sizeof v);
  }
  mix(t.data().data(), t.numel() * sizeof(T));
  return h;
}

template <typename T>
T l1_distance(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("l1_distance: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += std::abs(double(a[i]) - double(b[i]));
  return static_cast<T>(acc / double(a.numel()));
}

template <typename T>
Tensor<T> batch_item(const Tensor<T>& batch, std::size_t n) {
  if (batch.rank() != 4 || n >= batch.dim(0)) {
    throw IndexError("batch_item " + std::to_string(n) + " of " +
                     shape_string(batch.shape()));
  }
  const std::size_t per = batch.numel() / batch.dim(0);
  std::vector<T> out(batch.data().begin() + n * per,
                     batch.data().begin() + (n + 1) * per);
  return Tensor<T>({1, batch.dim(1), batch.dim(2), batch.dim(3)}, std::move(out));
}

template <typename T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ArgumentError("stack_batch of zero tensors");
  const Shape& first = items.front().shape();
  std::vector<T> out;
  out.reserve(items.size() * items.front().numel());
  for (const auto& t : items) {
    if (t.shape() != first || first.size() != 4 || first[0] != 1) {
      throw ShapeError("stack_batch: expected equal 1xCxHxW tensors, got " +
                       shape_string(t.shape()));
    }
    out.insert(out.end(), t.data().begin(), t.data().end());
  }
  return Tensor<T>({items.size(), first[1], first[2], first[3]}, std::move(out));
}

#define GATEDGAN_INSTANTIATE(T)                                               \
  template class Tensor<T>;                                                   \
  template bool bit_identical(const Tensor<T>&, const Tensor<T>&);            \
  template std::uint64_t tensor_digest(const Tensor<T>&);                     \
  template T l1_distance(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> batch_item(const Tensor<T>&, std::size_t);               \
  template Tensor<T> stack_batch(std::span<const Tensor<T>>);

GATEDGAN_INSTANTIATE(float)
GATEDGAN_INSTANTIATE(double)

}  // namespace gatedgan
