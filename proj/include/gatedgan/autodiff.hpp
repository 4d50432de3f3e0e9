#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <vector>

#include "gatedgan/tensor.hpp"

namespace gatedgan {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape that produced it is alive.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape->requires_grad(*this); }
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
/// so the node list is always topologically sorted.
template <typename T>
class Tape {
 public:
  /// Propagates the gradient of a node's output to its inputs through
  /// Tape::grad_target.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> variable(Tensor<T> value);

  /// Appends an op result. `backward` is dropped when no input requires grad.
  /// Throws NumericError if `value` holds NaN or Inf.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn backward);

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(check(v)).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(check(v)).requires_grad; }

  /// Gradient accumulator of node `id`, zero-allocated on first use, or
  /// nullptr when that node does not require grad.
  Tensor<T>* grad_target(std::size_t id);

  /// Runs the reverse sweep from a scalar loss. Clears gradients left by any
  /// previous sweep first.
  void backward(Var<T> loss);

  /// Gradient of `v` after backward(); nullptr when none was produced.
  const Tensor<T>* grad(Var<T> v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    Tensor<T> value;
    bool requires_grad = false;
    BackwardFn backward;
    std::optional<Tensor<T>> grad;
  };

  std::size_t check(Var<T> v) const;

  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

enum class PadMode { zero, reflect };

struct Padding {
  PadMode mode = PadMode::zero;
  std::size_t amount = 0;
};

enum class Activation { relu, leaky_relu, tanh };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kInstanceNormEps = 1e-5;

// Element-wise arithmetic. Shapes must match exactly; there is no broadcasting.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, double factor);
template <typename T> Var<T> add_scalar(Var<T> a, double offset);
template <typename T> Var<T> square(Var<T> a);
/// Sub-gradient 0 at the kink.
template <typename T> Var<T> abs(Var<T> a);

template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);

template <typename T> Var<T> activation(Var<T> x, Activation kind);
template <typename T> Var<T> relu(Var<T> x) { return activation(x, Activation::relu); }
template <typename T> Var<T> leaky_relu(Var<T> x) { return activation(x, Activation::leaky_relu); }
template <typename T> Var<T> tanh(Var<T> x) { return activation(x, Activation::tanh); }

/// Spatial padding of a rank-4 tensor. Reflect padding mirrors without
/// repeating the edge and requires amount < extent.
template <typename T> Var<T> pad2d(Var<T> x, Padding padding);

/// Cross-correlation. kernel is (out, in, k, k), bias is (out).
/// Output extent is floor((H + 2p - k) / s) + 1.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride,
              Padding padding);

/// Fractionally-strided convolution: exact adjoint of a 3x3 stride-2
/// zero-padding-1 convolution over a (2H x 2W) image. kernel is (in, out, 3, 3),
/// the same storage the forward convolution would use as (out', in', 3, 3).
template <typename T>
Var<T> conv2d_transpose(Var<T> input, Var<T> kernel, Var<T> bias,
                        std::size_t up_factor = 2);

/// Per (sample, channel) standardization over the spatial extent followed by
/// a per-channel affine map.
template <typename T>
Var<T> instance_normalize(Var<T> x, Var<T> gamma, Var<T> beta,
                          double eps = kInstanceNormEps);

/// Mean over the spatial axes: (N, C, H, W) -> (N, C).
template <typename T> Var<T> spatial_mean(Var<T> x);

/// -log softmax(logits)[target], averaged over rows. logits is (N, K) or (K).
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::size_t target_class);

/// Row-wise softmax of (N, K) or (K) values; not recorded on any tape.
template <typename T> Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace gatedgan
