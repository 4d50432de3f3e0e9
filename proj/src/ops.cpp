#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gatedgan/autodiff.hpp"

namespace gatedgan {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename T>
void require_rank4(const char* op, const Tensor<T>& t) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(op) + " expects a rank-4 tensor, got " +
                     shape_string(t.shape()));
  }
}

// Sliding-window geometry with implicit zero padding. Rows of the column
// matrix are (channel, ky, kx); columns are output positions (oy, ox).
struct Window {
  std::size_t channels, in_h, in_w, k, stride, pad, out_h, out_w;
};

template <typename T>
void im2col(const T* img, const Window& g, T* col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.pad);
  const std::ptrdiff_t in_h = static_cast<std::ptrdiff_t>(g.in_h);
  const std::ptrdiff_t in_w = static_cast<std::ptrdiff_t>(g.in_w);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = img + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.out_h * g.out_w;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= in_h) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + iy * in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            dst[ox] = (ix < 0 || ix >= in_w) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters (accumulates) columns back onto the image.
template <typename T>
void col2im(const T* col, const Window& g, T* img) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.pad);
  const std::ptrdiff_t in_h = static_cast<std::ptrdiff_t>(g.in_h);
  const std::ptrdiff_t in_w = static_cast<std::ptrdiff_t>(g.in_w);
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = img + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.out_h * g.out_w;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= in_h) continue;
          const T* src = row + oy * g.out_w;
          T* dst = plane + iy * in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T, typename Forward, typename Backward>
Var<T> unary_map(Var<T> a, Forward fwd, Backward bwd) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = fwd(x[i]);
  return a.tape->record(std::move(out), {a},
                        [a, bwd](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>* gx = tape.grad_target(a.id);
                          const Tensor<T>& x = tape.value(a);
                          for (std::size_t i = 0; i < x.numel(); ++i) {
                            (*gx)[i] += g[i] * bwd(x[i]);
                          }
                        });
}

std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t extent) {
  if (i < 0) i = -i;
  if (i >= extent) i = 2 * (extent - 1) - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] + y[i];
  return a.tape->record(std::move(out), {a, b},
                        [a, b](Tape<T>& tape, const Tensor<T>& g) {
                          for (Var<T> v : {a, b}) {
                            if (Tensor<T>* gv = tape.grad_target(v.id)) {
                              for (std::size_t i = 0; i < g.numel(); ++i) (*gv)[i] += g[i];
                            }
                          }
                        });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] - y[i];
  return a.tape->record(std::move(out), {a, b},
                        [a, b](Tape<T>& tape, const Tensor<T>& g) {
                          if (Tensor<T>* ga = tape.grad_target(a.id)) {
                            for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i];
                          }
                          if (Tensor<T>* gb = tape.grad_target(b.id)) {
                            for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] -= g[i];
                          }
                        });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * y[i];
  return a.tape->record(std::move(out), {a, b},
                        [a, b](Tape<T>& tape, const Tensor<T>& g) {
                          const Tensor<T>& x = tape.value(a);
                          const Tensor<T>& y = tape.value(b);
                          if (Tensor<T>* ga = tape.grad_target(a.id)) {
                            for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * y[i];
                          }
                          if (Tensor<T>* gb = tape.grad_target(b.id)) {
                            for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] += g[i] * x[i];
                          }
                        });
}

template <typename T>
Var<T> scale(Var<T> a, double factor) {
  const T f = static_cast<T>(factor);
  return unary_map(a, [f](T v) { return v * f; }, [f](T) { return f; });
}

template <typename T>
Var<T> add_scalar(Var<T> a, double offset) {
  const T o = static_cast<T>(offset);
  return unary_map(a, [o](T v) { return v + o; }, [](T) { return T{1}; });
}

template <typename T>
Var<T> square(Var<T> a) {
  return unary_map(a, [](T v) { return v * v; }, [](T v) { return T{2} * v; });
}

template <typename T>
Var<T> abs(Var<T> a) {
  return unary_map(
      a, [](T v) { return std::abs(v); },
      [](T v) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); });
}

template <typename T>
Var<T> sum(Var<T> a) {
  const Tensor<T>& x = a.value();
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return a.tape->record(Tensor<T>::scalar(static_cast<T>(acc)), {a},
                        [a](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>* gx = tape.grad_target(a.id);
                          for (T& v : gx->data()) v += g[0];
                        });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const Tensor<T>& x = a.value();
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  const double n = static_cast<double>(x.numel());
  return a.tape->record(Tensor<T>::scalar(static_cast<T>(acc / n)), {a},
                        [a, n](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>* gx = tape.grad_target(a.id);
                          const T share = static_cast<T>(g[0] / n);
                          for (T& v : gx->data()) v += share;
                        });
}

template <typename T>
Var<T> activation(Var<T> x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return unary_map(x, [](T v) { return v > T{0} ? v : T{0}; },
                       [](T v) { return v > T{0} ? T{1} : T{0}; });
    case Activation::leaky_relu: {
      const T slope = static_cast<T>(kLeakySlope);
      return unary_map(x, [slope](T v) { return v > T{0} ? v : slope * v; },
                       [slope](T v) { return v > T{0} ? T{1} : slope; });
    }
    case Activation::tanh: {
      const Tensor<T>& in = x.value();
      Tensor<T> out(in.shape());
      for (std::size_t i = 0; i < in.numel(); ++i) out[i] = std::tanh(in[i]);
      // The result's own node holds the saved output.
      const Var<T> self{x.tape, x.tape->size()};
      return x.tape->record(std::move(out), {x},
                            [x, self](Tape<T>& tape, const Tensor<T>& g) {
                              Tensor<T>* gx = tape.grad_target(x.id);
                              const Tensor<T>& out = tape.value(self);
                              for (std::size_t i = 0; i < g.numel(); ++i) {
                                (*gx)[i] += g[i] * (T{1} - out[i] * out[i]);
                              }
                            });
    }
  }
  throw ArgumentError("unknown activation kind");
}

template <typename T>
Var<T> pad2d(Var<T> x, Padding padding) {
  const Tensor<T>& in = x.value();
  require_rank4("pad2d", in);
  if (padding.amount == 0) return x;
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  const std::size_t p = padding.amount;
  if (padding.mode == PadMode::reflect && (p >= h || p >= w)) {
    throw ArgumentError("reflect padding " + std::to_string(p) +
                        " needs extents larger than the pad, got " +
                        shape_string(in.shape()));
  }
  const std::size_t ph = h + 2 * p, pw = w + 2 * p;
  Tensor<T> out({n, c, ph, pw});
  const bool reflect = padding.mode == PadMode::reflect;
  // For each padded position, the source pixel (or none for zero padding).
  auto source = [=](std::size_t y, std::size_t x_, std::size_t& sy, std::size_t& sx) {
    const std::ptrdiff_t ry = static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(p);
    const std::ptrdiff_t rx = static_cast<std::ptrdiff_t>(x_) - static_cast<std::ptrdiff_t>(p);
    if (reflect) {
      sy = reflect_index(ry, static_cast<std::ptrdiff_t>(h));
      sx = reflect_index(rx, static_cast<std::ptrdiff_t>(w));
      return true;
    }
    if (ry < 0 || rx < 0 || ry >= static_cast<std::ptrdiff_t>(h) ||
        rx >= static_cast<std::ptrdiff_t>(w)) {
      return false;
    }
    sy = static_cast<std::size_t>(ry);
    sx = static_cast<std::size_t>(rx);
    return true;
  };
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t xx = 0; xx < pw; ++xx) {
          std::size_t sy = 0, sx = 0;
          if (source(y, xx, sy, sx)) out.at(b, ch, y, xx) = in.at(b, ch, sy, sx);
        }
      }
    }
  }
  return x.tape->record(std::move(out), {x},
                        [x, source, n, c, ph, pw](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>* gx = tape.grad_target(x.id);
                          for (std::size_t b = 0; b < n; ++b) {
                            for (std::size_t ch = 0; ch < c; ++ch) {
                              for (std::size_t y = 0; y < ph; ++y) {
                                for (std::size_t xx = 0; xx < pw; ++xx) {
                                  std::size_t sy = 0, sx = 0;
                                  if (source(y, xx, sy, sx)) {
                                    gx->at(b, ch, sy, sx) += g.at(b, ch, y, xx);
                                  }
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride,
              Padding padding) {
  require_rank4("conv2d input", input.value());
  require_rank4("conv2d kernel", kernel.value());
  const Shape& ks = kernel.shape();
  if (ks[1] != input.shape()[1] || ks[2] != ks[3]) {
    throw ShapeError("conv2d kernel " + shape_string(ks) + " does not fit input " +
                     shape_string(input.shape()));
  }
  if (bias.shape() != Shape{ks[0]}) {
    throw ShapeError("conv2d bias " + shape_string(bias.shape()) + " for " +
                     std::to_string(ks[0]) + " output channels");
  }
  if (stride != 1 && stride != 2) {
    throw ArgumentError("conv2d stride must be 1 or 2, got " + std::to_string(stride));
  }
  Var<T> src = input;
  std::size_t implicit_pad = padding.amount;
  if (padding.mode == PadMode::reflect) {
    src = pad2d(input, padding);
    implicit_pad = 0;
  }
  const Tensor<T>& x = src.value();
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t k = ks[2], co = ks[0];
  if (h + 2 * implicit_pad < k || w + 2 * implicit_pad < k) {
    throw ArgumentError("conv2d padding " + std::to_string(padding.amount) +
                        " insufficient for kernel " + std::to_string(k) +
                        " on input " + shape_string(input.shape()));
  }
  const Window g{c, h, w, k, stride, implicit_pad,
                 (h + 2 * implicit_pad - k) / stride + 1,
                 (w + 2 * implicit_pad - k) / stride + 1};
  const std::size_t rows = c * k * k, cols = g.out_h * g.out_w;
  Tensor<T> out({n, co, g.out_h, g.out_w});
  Buffer<T> col(rows * cols);
  ConstMatrixMap<T> weights(kernel.value().data().data(), co, rows);
  const Tensor<T>& b = bias.value();
  for (std::size_t s = 0; s < n; ++s) {
    im2col(x.data().data() + s * c * h * w, g, col.data());
    MatrixMap<T> out_s(out.data().data() + s * co * cols, co, cols);
    out_s.noalias() = weights * ConstMatrixMap<T>(col.data(), rows, cols);
    for (std::size_t o = 0; o < co; ++o) out_s.row(o).array() += b[o];
  }
  return input.tape->record(
      std::move(out), {src, kernel, bias},
      [src, kernel, bias, g, n, co, rows, cols](Tape<T>& tape, const Tensor<T>& gout) {
        const Tensor<T>& x = tape.value(src);
        Tensor<T>* gx = tape.grad_target(src.id);
        Tensor<T>* gk = tape.grad_target(kernel.id);
        Tensor<T>* gb = tape.grad_target(bias.id);
        const std::size_t plane = g.channels * g.in_h * g.in_w;
        Buffer<T> col(rows * cols);
        ConstMatrixMap<T> weights(tape.value(kernel).data().data(), co, rows);
        for (std::size_t s = 0; s < n; ++s) {
          ConstMatrixMap<T> go(gout.data().data() + s * co * cols, co, cols);
          if (gb) {
            for (std::size_t o = 0; o < co; ++o) (*gb)[o] += go.row(o).sum();
          }
          if (gk) {
            im2col(x.data().data() + s * plane, g, col.data());
            MatrixMap<T> gkm(gk->data().data(), co, rows);
            gkm.noalias() += go * ConstMatrixMap<T>(col.data(), rows, cols).transpose();
          }
          if (gx) {
            MatrixMap<T> dcol(col.data(), rows, cols);
            dcol.noalias() = weights.transpose() * go;
            col2im(col.data(), g, gx->data().data() + s * plane);
          }
        }
      });
}

template <typename T>
Var<T> conv2d_transpose(Var<T> input, Var<T> kernel, Var<T> bias,
                        std::size_t up_factor) {
  if (up_factor != 2) {
    throw ArgumentError("conv2d_transpose supports up_factor 2 only");
  }
  require_rank4("conv2d_transpose input", input.value());
  require_rank4("conv2d_transpose kernel", kernel.value());
  const Shape& ks = kernel.shape();
  const Tensor<T>& x = input.value();
  if (ks[0] != x.dim(1) || ks[2] != 3 || ks[3] != 3) {
    throw ShapeError("conv2d_transpose kernel " + shape_string(ks) +
                     " does not fit input " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t co = ks[1];
  if (bias.shape() != Shape{co}) {
    throw ShapeError("conv2d_transpose bias " + shape_string(bias.shape()));
  }
  // The image side of the window is the (2H x 2W) output; the column side
  // is the input grid.
  const Window g{co, 2 * h, 2 * w, 3, 2, 1, h, w};
  const std::size_t rows = co * 9, cols = h * w;
  Tensor<T> out({n, co, 2 * h, 2 * w});
  Buffer<T> col(rows * cols);
  ConstMatrixMap<T> weights(kernel.value().data().data(), ci, rows);
  const Tensor<T>& b = bias.value();
  const std::size_t out_plane = co * 4 * h * w;
  for (std::size_t s = 0; s < n; ++s) {
    MatrixMap<T> cm(col.data(), rows, cols);
    cm.noalias() = weights.transpose() * ConstMatrixMap<T>(x.data().data() + s * ci * cols, ci, cols);
    T* dst = out.data().data() + s * out_plane;
    col2im(col.data(), g, dst);
    for (std::size_t o = 0; o < co; ++o) {
      for (std::size_t i = 0; i < 4 * h * w; ++i) dst[o * 4 * h * w + i] += b[o];
    }
  }
  return input.tape->record(
      std::move(out), {input, kernel, bias},
      [input, kernel, bias, g, n, ci, co, rows, cols, out_plane](Tape<T>& tape,
                                                                  const Tensor<T>& gout) {
        const Tensor<T>& x = tape.value(input);
        Tensor<T>* gx = tape.grad_target(input.id);
        Tensor<T>* gk = tape.grad_target(kernel.id);
        Tensor<T>* gb = tape.grad_target(bias.id);
        ConstMatrixMap<T> weights(tape.value(kernel).data().data(), ci, rows);
        Buffer<T> col(rows * cols);
        const std::size_t area = g.in_h * g.in_w;
        for (std::size_t s = 0; s < n; ++s) {
          const T* go = gout.data().data() + s * out_plane;
          if (gb) {
            for (std::size_t o = 0; o < co; ++o) {
              double acc = 0.0;
              for (std::size_t i = 0; i < area; ++i) acc += go[o * area + i];
              (*gb)[o] += static_cast<T>(acc);
            }
          }
          if (!gx && !gk) continue;
          im2col(go, g, col.data());
          ConstMatrixMap<T> gcol(col.data(), rows, cols);
          if (gx) {
            MatrixMap<T> gxm(gx->data().data() + s * ci * cols, ci, cols);
            gxm.noalias() += weights * gcol;
          }
          if (gk) {
            MatrixMap<T> gkm(gk->data().data(), ci, rows);
            gkm.noalias() += ConstMatrixMap<T>(x.data().data() + s * ci * cols, ci, cols) *
                             gcol.transpose();
          }
        }
      });
}

template <typename T>
Var<T> instance_normalize(Var<T> x, Var<T> gamma, Var<T> beta, double eps) {
  const Tensor<T>& in = x.value();
  require_rank4("instance_normalize", in);
  if (!(eps > 0.0)) throw ArgumentError("instance_normalize eps must be positive");
  const std::size_t n = in.dim(0), c = in.dim(1), area = in.dim(2) * in.dim(3);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw ShapeError("instance_normalize affine terms must have shape [" +
                     std::to_string(c) + "]");
  }
  const Tensor<T>& ga = gamma.value();
  const Tensor<T>& be = beta.value();
  Tensor<T> normalized(in.shape());
  std::vector<T> inv_std(n * c);
  Tensor<T> out(in.shape());
  for (std::size_t s = 0; s < n * c; ++s) {
    const T* src = in.data().data() + s * area;
    double m = 0.0;
    for (std::size_t i = 0; i < area; ++i) m += src[i];
    m /= double(area);
    double var = 0.0;
    for (std::size_t i = 0; i < area; ++i) var += (src[i] - m) * (src[i] - m);
    var /= double(area);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[s] = static_cast<T>(is);
    const std::size_t ch = s % c;
    T* xh = normalized.data().data() + s * area;
    T* dst = out.data().data() + s * area;
    for (std::size_t i = 0; i < area; ++i) {
      xh[i] = static_cast<T>((src[i] - m) * is);
      dst[i] = ga[ch] * xh[i] + be[ch];
    }
  }
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, normalized = std::move(normalized), inv_std = std::move(inv_std), n, c,
       area](Tape<T>& tape, const Tensor<T>& g) {
        Tensor<T>* gx = tape.grad_target(x.id);
        Tensor<T>* gg = tape.grad_target(gamma.id);
        Tensor<T>* gbeta = tape.grad_target(beta.id);
        const Tensor<T>& ga = tape.value(gamma);
        for (std::size_t s = 0; s < n * c; ++s) {
          const std::size_t ch = s % c;
          const T* go = g.data().data() + s * area;
          const T* xh = normalized.data().data() + s * area;
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t i = 0; i < area; ++i) {
            sum_g += go[i];
            sum_gx += double(go[i]) * xh[i];
          }
          if (gg) (*gg)[ch] += static_cast<T>(sum_gx);
          if (gbeta) (*gbeta)[ch] += static_cast<T>(sum_g);
          if (gx) {
            const double mean_g = sum_g / double(area);
            const double mean_gx = sum_gx / double(area);
            const double factor = double(ga[ch]) * inv_std[s];
            T* dst = gx->data().data() + s * area;
            for (std::size_t i = 0; i < area; ++i) {
              dst[i] += static_cast<T>(factor * (go[i] - mean_g - xh[i] * mean_gx));
            }
          }
        }
      });
}

template <typename T>
Var<T> spatial_mean(Var<T> x) {
  const Tensor<T>& in = x.value();
  require_rank4("spatial_mean", in);
  const std::size_t n = in.dim(0), c = in.dim(1), area = in.dim(2) * in.dim(3);
  Tensor<T> out({n, c});
  for (std::size_t s = 0; s < n * c; ++s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += in[s * area + i];
    out[s] = static_cast<T>(acc / double(area));
  }
  return x.tape->record(std::move(out), {x},
                        [x, n, c, area](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>* gx = tape.grad_target(x.id);
                          for (std::size_t s = 0; s < n * c; ++s) {
                            const T share = static_cast<T>(g[s] / double(area));
                            for (std::size_t i = 0; i < area; ++i) (*gx)[s * area + i] += share;
                          }
                        });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw ShapeError("softmax expects (K) or (N, K), got " + shape_string(logits.shape()));
  }
  const std::size_t k = logits.shape().back();
  const std::size_t rows = logits.numel() / k;
  Tensor<T> out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = logits.data().data() + r * k;
    const T m = *std::max_element(src, src + k);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(double(src[i] - m));
    for (std::size_t i = 0; i < k; ++i) {
      out[r * k + i] = static_cast<T>(std::exp(double(src[i] - m)) / z);
    }
  }
  return out;
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::size_t target_class) {
  const Tensor<T>& l = logits.value();
  if (l.rank() != 1 && l.rank() != 2) {
    throw ShapeError("softmax_cross_entropy expects (K) or (N, K), got " +
                     shape_string(l.shape()));
  }
  const std::size_t k = l.shape().back();
  if (k < 2) throw ArgumentError("softmax_cross_entropy needs at least 2 classes");
  if (target_class >= k) {
    throw IndexError("target class " + std::to_string(target_class) + " outside [0, " +
                     std::to_string(k) + ")");
  }
  const std::size_t rows = l.numel() / k;
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = l.data().data() + r * k;
    const double m = *std::max_element(src, src + k);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(double(src[i]) - m);
    loss += m + std::log(z) - double(src[target_class]);
  }
  loss /= double(rows);
  return logits.tape->record(
      Tensor<T>::scalar(static_cast<T>(loss)), {logits},
      [logits, target_class, rows, k](Tape<T>& tape, const Tensor<T>& g) {
        Tensor<T>* gl = tape.grad_target(logits.id);
        const Tensor<T> p = softmax(tape.value(logits));
        const double share = double(g[0]) / double(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < k; ++i) {
            const double onehot = i == target_class ? 1.0 : 0.0;
            (*gl)[r * k + i] += static_cast<T>(share * (double(p[r * k + i]) - onehot));
          }
        }
      });
}

#define GATEDGAN_INSTANTIATE_OPS(T)                                                 \
  template Var<T> add(Var<T>, Var<T>);                                              \
  template Var<T> sub(Var<T>, Var<T>);                                              \
  template Var<T> mul(Var<T>, Var<T>);                                              \
  template Var<T> scale(Var<T>, double);                                            \
  template Var<T> add_scalar(Var<T>, double);                                       \
  template Var<T> square(Var<T>);                                                   \
  template Var<T> abs(Var<T>);                                                      \
  template Var<T> sum(Var<T>);                                                      \
  template Var<T> mean(Var<T>);                                                     \
  template Var<T> activation(Var<T>, Activation);                                   \
  template Var<T> pad2d(Var<T>, Padding);                                           \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, std::size_t, Padding);             \
  template Var<T> conv2d_transpose(Var<T>, Var<T>, Var<T>, std::size_t);            \
  template Var<T> instance_normalize(Var<T>, Var<T>, Var<T>, double);               \
  template Var<T> spatial_mean(Var<T>);                                             \
  template Var<T> softmax_cross_entropy(Var<T>, std::size_t);                       \
  template Tensor<T> softmax(const Tensor<T>&);

GATEDGAN_INSTANTIATE_OPS(float)
GATEDGAN_INSTANTIATE_OPS(double)

}  // namespace gatedgan
