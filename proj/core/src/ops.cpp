#include "mpa/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace mpa::tensor {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>* t) { return t->requires_grad(); });
}

template <typename T>
Tensor<T> emit(Shape shape, std::vector<T> values, const char* op, bool record,
               std::vector<NodePtr<T>> inputs, std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  if (record) {
    node->leaf = false;
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor<T>::from_node(std::move(node));
}

template <typename T>
void require_defined(const Tensor<T>& t, const char* what) {
  if (!t.defined()) throw ShapeError(std::string(what) + ": undefined tensor");
}

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

// Output index range [lo, hi) for which out * stride + tap - pad lands in [0, n).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_range(std::size_t n, std::size_t out_len, std::size_t stride, std::size_t tap,
                 std::size_t pad) {
  const auto n_ = static_cast<std::int64_t>(n);
  const auto s = static_cast<std::int64_t>(stride);
  const auto off = static_cast<std::int64_t>(tap) - static_cast<std::int64_t>(pad);
  // need out*s + off >= 0  and out*s + off <= n-1
  std::int64_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
  std::int64_t top = n_ - 1 - off;
  std::int64_t hi = top < 0 ? 0 : top / s + 1;
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(out_len));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename T>
inline void axpy(T* __restrict y, const T* __restrict x, T a, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline void axpy_strided(T* __restrict y, const T* __restrict x, T a, std::size_t n,
                         std::size_t stride) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i * stride];
}

template <typename T>
inline void scatter_strided(T* __restrict y, const T* __restrict x, T a, std::size_t n,
                            std::size_t stride) {
  for (std::size_t i = 0; i < n; ++i) y[i * stride] += a * x[i];
}

template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline T dot_strided(const T* __restrict a, const T* __restrict b, std::size_t n,
                     std::size_t stride) {
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i * stride];
  return acc;
}

template <typename T>
inline T sum(const T* a, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv1d

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_defined(input, "conv1d");
  require_defined(weight, "conv1d");
  require_defined(bias, "conv1d");
  const bool batched = input.rank() == 3;
  if (!batched && input.rank() != 2) shape_fail("conv1d", "input must be [C, L] or [B, C, L]");
  if (weight.rank() != 3) shape_fail("conv1d", "weight must be [C_out, C_in, K]");
  const std::size_t B = batched ? input.dim(0) : 1;
  const std::size_t Ci = input.dim(batched ? 1 : 0);
  const std::size_t L = input.dim(batched ? 2 : 1);
  const std::size_t Co = weight.dim(0);
  const std::size_t K = weight.dim(2);
  if (weight.dim(1) != Ci) {
    shape_fail("conv1d", "weight expects " + std::to_string(weight.dim(1)) +
                             " input channels, input has " + std::to_string(Ci));
  }
  if (bias.rank() != 1 || bias.dim(0) != Co) shape_fail("conv1d", "bias must be [C_out]");
  if (stride == 0) shape_fail("conv1d", "stride must be >= 1");
  if (K > L + 2 * padding) shape_fail("conv1d", "kernel longer than padded input");
  const std::size_t Lo = (L + 2 * padding - K) / stride + 1;

  const T* x = input.values().data();
  const T* w = weight.values().data();
  const T* bv = bias.values().data();
  std::vector<T> out(B * Co * Lo);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      T* row = out.data() + (b * Co + co) * Lo;
      std::fill(row, row + Lo, bv[co]);
      for (std::size_t ci = 0; ci < Ci; ++ci) {
        const T* xr = x + (b * Ci + ci) * L;
        const T* wr = w + (co * Ci + ci) * K;
        for (std::size_t k = 0; k < K; ++k) {
          const auto r = valid_range(L, Lo, stride, k, padding);
          if (r.lo >= r.hi) continue;
          const T* src = xr + (r.lo * stride + k - padding);
          if (stride == 1) {
            axpy(row + r.lo, src, wr[k], r.hi - r.lo);
          } else {
            axpy_strided(row + r.lo, src, wr[k], r.hi - r.lo, stride);
          }
        }
      }
    }
  }

  Shape shape = batched ? Shape{B, Co, Lo} : Shape{Co, Lo};
  const bool record = should_record({&input, &weight, &bias});
  return emit<T>(
      std::move(shape), std::move(out), "conv1d", record,
      {input.node(), weight.node(), bias.node()},
      [B, Ci, L, Co, K, Lo, stride, padding](Node<T>& self) {
        const T* g = self.grad.data();
        Node<T>& in = *self.inputs[0];
        Node<T>& wt = *self.inputs[1];
        Node<T>& bs = *self.inputs[2];
        const T* x = in.value.data();
        const T* w = wt.value.data();
        T* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
        T* dw = wt.requires_grad ? wt.grad_buffer().data() : nullptr;
        T* db = bs.requires_grad ? bs.grad_buffer().data() : nullptr;
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t co = 0; co < Co; ++co) {
            const T* gr = g + (b * Co + co) * Lo;
            if (db) db[co] += sum(gr, Lo);
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const std::size_t xoff = (b * Ci + ci) * L;
              const std::size_t woff = (co * Ci + ci) * K;
              for (std::size_t k = 0; k < K; ++k) {
                const auto r = valid_range(L, Lo, stride, k, padding);
                if (r.lo >= r.hi) continue;
                const std::size_t n = r.hi - r.lo;
                const std::size_t start = xoff + r.lo * stride + k - padding;
                if (stride == 1) {
                  if (dx) axpy(dx + start, gr + r.lo, w[woff + k], n);
                  if (dw) dw[woff + k] += dot(gr + r.lo, x + start, n);
                } else {
                  if (dx) scatter_strided(dx + start, gr + r.lo, w[woff + k], n, stride);
                  if (dw) dw[woff + k] += dot_strided(gr + r.lo, x + start, n, stride);
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_defined(input, "conv2d");
  require_defined(weight, "conv2d");
  require_defined(bias, "conv2d");
  const bool batched = input.rank() == 4;
  if (!batched && input.rank() != 3) shape_fail("conv2d", "input must be [C, H, W] or [B, C, H, W]");
  if (weight.rank() != 4) shape_fail("conv2d", "weight must be [C_out, C_in, KH, KW]");
  const std::size_t off = batched ? 1 : 0;
  const std::size_t B = batched ? input.dim(0) : 1;
  const std::size_t Ci = input.dim(off);
  const std::size_t H = input.dim(off + 1);
  const std::size_t W = input.dim(off + 2);
  const std::size_t Co = weight.dim(0);
  const std::size_t KH = weight.dim(2);
  const std::size_t KW = weight.dim(3);
  if (weight.dim(1) != Ci) {
    shape_fail("conv2d", "weight expects " + std::to_string(weight.dim(1)) +
                             " input channels, input has " + std::to_string(Ci));
  }
  if (bias.rank() != 1 || bias.dim(0) != Co) shape_fail("conv2d", "bias must be [C_out]");
  if (stride == 0) shape_fail("conv2d", "stride must be >= 1");
  if (KH > H + 2 * padding || KW > W + 2 * padding) {
    shape_fail("conv2d", "kernel larger than padded input");
  }
  const std::size_t Ho = (H + 2 * padding - KH) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - KW) / stride + 1;

  std::vector<Span> col_ranges(KW);
  for (std::size_t kx = 0; kx < KW; ++kx) col_ranges[kx] = valid_range(W, Wo, stride, kx, padding);

  const T* x = input.values().data();
  const T* w = weight.values().data();
  const T* bv = bias.values().data();
  std::vector<T> out(B * Co * Ho * Wo);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t co = 0; co < Co; ++co) {
        T* row = out.data() + ((b * Co + co) * Ho + oy) * Wo;
        std::fill(row, row + Wo, bv[co]);
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          const T* plane = x + (b * Ci + ci) * H * W;
          const T* wk = w + (co * Ci + ci) * KH * KW;
          for (std::size_t ky = 0; ky < KH; ++ky) {
            const auto iy = static_cast<std::int64_t>(oy * stride + ky) -
                            static_cast<std::int64_t>(padding);
            if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
            const T* xr = plane + static_cast<std::size_t>(iy) * W;
            for (std::size_t kx = 0; kx < KW; ++kx) {
              const auto r = col_ranges[kx];
              if (r.lo >= r.hi) continue;
              const T* src = xr + (r.lo * stride + kx - padding);
              if (stride == 1) {
                axpy(row + r.lo, src, wk[ky * KW + kx], r.hi - r.lo);
              } else {
                axpy_strided(row + r.lo, src, wk[ky * KW + kx], r.hi - r.lo, stride);
              }
            }
          }
        }
      }
    }
  }

  Shape shape = batched ? Shape{B, Co, Ho, Wo} : Shape{Co, Ho, Wo};
  const bool record = should_record({&input, &weight, &bias});
  return emit<T>(
      std::move(shape), std::move(out), "conv2d", record,
      {input.node(), weight.node(), bias.node()},
      [B, Ci, H, W, Co, KH, KW, Ho, Wo, stride, padding, col_ranges](Node<T>& self) {
        const T* g = self.grad.data();
        Node<T>& in = *self.inputs[0];
        Node<T>& wt = *self.inputs[1];
        Node<T>& bs = *self.inputs[2];
        const T* x = in.value.data();
        const T* w = wt.value.data();
        T* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
        T* dw = wt.requires_grad ? wt.grad_buffer().data() : nullptr;
        T* db = bs.requires_grad ? bs.grad_buffer().data() : nullptr;
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t co = 0; co < Co; ++co) {
              const T* gr = g + ((b * Co + co) * Ho + oy) * Wo;
              if (db) db[co] += sum(gr, Wo);
              for (std::size_t ci = 0; ci < Ci; ++ci) {
                const std::size_t plane = (b * Ci + ci) * H * W;
                const std::size_t woff = (co * Ci + ci) * KH * KW;
                for (std::size_t ky = 0; ky < KH; ++ky) {
                  const auto iy = static_cast<std::int64_t>(oy * stride + ky) -
                                  static_cast<std::int64_t>(padding);
                  if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
                  const std::size_t rowoff = plane + static_cast<std::size_t>(iy) * W;
                  for (std::size_t kx = 0; kx < KW; ++kx) {
                    const auto r = col_ranges[kx];
                    if (r.lo >= r.hi) continue;
                    const std::size_t n = r.hi - r.lo;
                    const std::size_t start = rowoff + r.lo * stride + kx - padding;
                    const std::size_t widx = woff + ky * KW + kx;
                    if (stride == 1) {
                      if (dx) axpy(dx + start, gr + r.lo, w[widx], n);
                      if (dw) dw[widx] += dot(gr + r.lo, x + start, n);
                    } else {
                      if (dx) scatter_strided(dx + start, gr + r.lo, w[widx], n, stride);
                      if (dw) dw[widx] += dot_strided(gr + r.lo, x + start, n, stride);
                    }
                  }
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// batchnorm1d

template <typename T>
Tensor<T> batchnorm1d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, Mode mode, double eps, double momentum) {
  require_defined(input, "batchnorm1d");
  if (input.rank() != 3) shape_fail("batchnorm1d", "input must be [B, C, L]");
  const std::size_t B = input.dim(0);
  const std::size_t C = input.dim(1);
  const std::size_t L = input.dim(2);
  if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C) {
    shape_fail("batchnorm1d", "gamma/beta must be [C]");
  }
  if (state.running_mean.size() != C || state.running_var.size() != C) {
    shape_fail("batchnorm1d", "running statistics sized for a different channel count");
  }
  const std::size_t m = B * L;
  if (mode == Mode::train && m < 2) {
    throw std::invalid_argument("batchnorm1d: train mode needs more than one value per channel");
  }

  const T* x = input.values().data();
  const T* gm = gamma.values().data();
  const T* bt = beta.values().data();
  std::vector<T> out(input.numel());
  std::vector<T> xhat(input.numel());
  std::vector<T> inv_std(C);

  for (std::size_t c = 0; c < C; ++c) {
    double mean;
    double var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* row = x + (b * C + c) * L;
        for (std::size_t l = 0; l < L; ++l) s += row[l];
      }
      mean = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* row = x + (b * C + c) * L;
        for (std::size_t l = 0; l < L; ++l) {
          const double d = row[l] - mean;
          ss += d * d;
        }
      }
      var = ss / static_cast<double>(m);
      const double unbiased = ss / static_cast<double>(m - 1);
      state.running_mean[c] =
          static_cast<T>((1.0 - momentum) * state.running_mean[c] + momentum * mean);
      state.running_var[c] =
          static_cast<T>((1.0 - momentum) * state.running_var[c] + momentum * unbiased);
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[c] = static_cast<T>(inv);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t o = (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) {
        const T h = static_cast<T>((x[o + l] - mean) * inv);
        xhat[o + l] = h;
        out[o + l] = gm[c] * h + bt[c];
      }
    }
  }

  const bool record = should_record({&input, &gamma, &beta});
  if (!record) xhat.clear();
  return emit<T>(
      input.shape(), std::move(out), "batchnorm1d", record,
      {input.node(), gamma.node(), beta.node()},
      [B, C, L, m, mode, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        const T* g = self.grad.data();
        Node<T>& in = *self.inputs[0];
        Node<T>& gn = *self.inputs[1];
        Node<T>& bn = *self.inputs[2];
        const T* gm = gn.value.data();
        T* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
        T* dg = gn.requires_grad ? gn.grad_buffer().data() : nullptr;
        T* dbt = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t o = (b * C + c) * L;
            for (std::size_t l = 0; l < L; ++l) {
              sum_g += g[o + l];
              sum_gx += static_cast<double>(g[o + l]) * xhat[o + l];
            }
          }
          if (dg) dg[c] += static_cast<T>(sum_gx);
          if (dbt) dbt[c] += static_cast<T>(sum_g);
          if (!dx) continue;
          const double scale = static_cast<double>(gm[c]) * inv_std[c];
          const double md = static_cast<double>(m);
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t o = (b * C + c) * L;
            for (std::size_t l = 0; l < L; ++l) {
              if (mode == Mode::train) {
                dx[o + l] += static_cast<T>(
                    scale / md * (md * g[o + l] - sum_g - xhat[o + l] * sum_gx));
              } else {
                dx[o + l] += static_cast<T>(scale * g[o + l]);
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// activations

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, double slope) {
  require_defined(input, "leaky_relu");
  const T a = static_cast<T>(slope);
  const auto xs = input.values();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] > T{0} ? xs[i] : a * xs[i];
  const bool record = should_record({&input});
  return emit<T>(input.shape(), std::move(out), slope == 0.0 ? "relu" : "leaky_relu", record,
                 {input.node()}, [a](Node<T>& self) {
                   Node<T>& in = *self.inputs[0];
                   const T* x = in.value.data();
                   const T* g = self.grad.data();
                   T* dx = in.grad_buffer().data();
                   const std::size_t n = in.value.size();
                   for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > T{0} ? g[i] : a * g[i];
                 });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  return leaky_relu(input, 0.0);
}

// ---------------------------------------------------------------------------
// pooling

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window) {
  require_defined(input, "maxpool2d");
  const bool batched = input.rank() == 4;
  if (!batched && input.rank() != 3) shape_fail("maxpool2d", "input must be [C, H, W] or [B, C, H, W]");
  if (window == 0) shape_fail("maxpool2d", "window must be positive");
  const std::size_t off = batched ? 1 : 0;
  const std::size_t planes = (batched ? input.dim(0) : 1) * input.dim(off);
  const std::size_t H = input.dim(off + 1);
  const std::size_t W = input.dim(off + 2);
  if (H < window || W < window) {
    shape_fail("maxpool2d", "spatial size " + std::to_string(H) + "x" + std::to_string(W) +
                                " smaller than window " + std::to_string(window));
  }
  const std::size_t Ho = H / window;
  const std::size_t Wo = W / window;
  const T* x = input.values().data();
  std::vector<T> out(planes * Ho * Wo);
  std::vector<std::uint32_t> arg(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = x + p * H * W;
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        std::size_t best = (oy * window) * W + ox * window;
        for (std::size_t ky = 0; ky < window; ++ky) {
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = (oy * window + ky) * W + ox * window + kx;
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::size_t o = (p * Ho + oy) * Wo + ox;
        out[o] = plane[best];
        arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  Shape shape = input.shape();
  shape[off + 1] = Ho;
  shape[off + 2] = Wo;
  const bool record = should_record({&input});
  if (!record) arg.clear();
  return emit<T>(std::move(shape), std::move(out), "maxpool2d", record, {input.node()},
                 [planes, H, W, Ho, Wo, arg = std::move(arg)](Node<T>& self) {
                   Node<T>& in = *self.inputs[0];
                   const T* g = self.grad.data();
                   T* dx = in.grad_buffer().data();
                   for (std::size_t p = 0; p < planes; ++p) {
                     for (std::size_t i = 0; i < Ho * Wo; ++i) {
                       const std::size_t o = p * Ho * Wo + i;
                       dx[p * H * W + arg[o]] += g[o];
                     }
                   }
                 });
}

template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& input, std::size_t out_h, std::size_t out_w) {
  require_defined(input, "adaptive_avg_pool2d");
  if (input.rank() != 4) shape_fail("adaptive_avg_pool2d", "input must be [B, C, H, W]");
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t H = input.dim(2);
  const std::size_t W = input.dim(3);
  if (out_h == 0 || out_w == 0 || out_h > H || out_w > W) {
    shape_fail("adaptive_avg_pool2d", "output grid must be within the input size");
  }
  auto bins = [](std::size_t n, std::size_t k) {
    std::vector<Span> b(k);
    for (std::size_t i = 0; i < k; ++i) b[i] = {i * n / k, ((i + 1) * n + k - 1) / k};
    return b;
  };
  const auto rows = bins(H, out_h);
  const auto cols = bins(W, out_w);
  const T* x = input.values().data();
  std::vector<T> out(planes * out_h * out_w);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = x + p * H * W;
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        double s = 0.0;
        for (std::size_t y = rows[i].lo; y < rows[i].hi; ++y) {
          for (std::size_t xx = cols[j].lo; xx < cols[j].hi; ++xx) s += plane[y * W + xx];
        }
        const double count = static_cast<double>((rows[i].hi - rows[i].lo) * (cols[j].hi - cols[j].lo));
        out[(p * out_h + i) * out_w + j] = static_cast<T>(s / count);
      }
    }
  }
  const bool record = should_record({&input});
  return emit<T>({input.dim(0), input.dim(1), out_h, out_w}, std::move(out), "adaptive_avg_pool2d",
                 record, {input.node()}, [planes, H, W, out_h, out_w, rows, cols](Node<T>& self) {
                   Node<T>& in = *self.inputs[0];
                   const T* g = self.grad.data();
                   T* dx = in.grad_buffer().data();
                   for (std::size_t p = 0; p < planes; ++p) {
                     T* plane = dx + p * H * W;
                     for (std::size_t i = 0; i < out_h; ++i) {
                       for (std::size_t j = 0; j < out_w; ++j) {
                         const double count = static_cast<double>((rows[i].hi - rows[i].lo) *
                                                                  (cols[j].hi - cols[j].lo));
                         const T share = static_cast<T>(g[(p * out_h + i) * out_w + j] / count);
                         for (std::size_t y = rows[i].lo; y < rows[i].hi; ++y) {
                           for (std::size_t xx = cols[j].lo; xx < cols[j].hi; ++xx) {
                             plane[y * W + xx] += share;
                           }
                         }
                       }
                     }
                   }
                 });
}

template <typename T>
Tensor<T> temporal_mean(const Tensor<T>& input) {
  require_defined(input, "temporal_mean");
  if (input.rank() != 3) shape_fail("temporal_mean", "input must be [B, C, L]");
  const std::size_t rows = input.dim(0) * input.dim(1);
  const std::size_t L = input.dim(2);
  const T* x = input.values().data();
  std::vector<T> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) s += x[r * L + l];
    out[r] = static_cast<T>(s / static_cast<double>(L));
  }
  const bool record = should_record({&input});
  return emit<T>({input.dim(0), input.dim(1)}, std::move(out), "temporal_mean", record,
                 {input.node()}, [rows, L](Node<T>& self) {
                   Node<T>& in = *self.inputs[0];
                   const T* g = self.grad.data();
                   T* dx = in.grad_buffer().data();
                   const T inv = T{1} / static_cast<T>(L);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const T share = g[r] * inv;
                     for (std::size_t l = 0; l < L; ++l) dx[r * L + l] += share;
                   }
                 });
}

// ---------------------------------------------------------------------------
// linear

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_defined(input, "linear");
  if (weight.rank() != 2) shape_fail("linear", "weight must be [F_out, F_in]");
  const std::size_t Fo = weight.dim(0);
  const std::size_t Fi = weight.dim(1);
  if (input.shape().back() != Fi) {
    shape_fail("linear", "input feature size " + std::to_string(input.shape().back()) +
                             " does not match weight F_in " + std::to_string(Fi));
  }
  if (bias.rank() != 1 || bias.dim(0) != Fo) shape_fail("linear", "bias must be [F_out]");
  const std::size_t R = input.numel() / Fi;
  const T* x = input.values().data();
  const T* w = weight.values().data();
  const T* bv = bias.values().data();
  std::vector<T> out(R * Fo);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t o = 0; o < Fo; ++o) out[r * Fo + o] = bv[o] + dot(w + o * Fi, x + r * Fi, Fi);
  }
  Shape shape = input.shape();
  shape.back() = Fo;
  const bool record = should_record({&input, &weight, &bias});
  return emit<T>(std::move(shape), std::move(out), "linear", record,
                 {input.node(), weight.node(), bias.node()}, [R, Fi, Fo](Node<T>& self) {
                   const T* g = self.grad.data();
                   Node<T>& in = *self.inputs[0];
                   Node<T>& wt = *self.inputs[1];
                   Node<T>& bs = *self.inputs[2];
                   const T* x = in.value.data();
                   const T* w = wt.value.data();
                   T* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
                   T* dw = wt.requires_grad ? wt.grad_buffer().data() : nullptr;
                   T* db = bs.requires_grad ? bs.grad_buffer().data() : nullptr;
                   for (std::size_t r = 0; r < R; ++r) {
                     for (std::size_t o = 0; o < Fo; ++o) {
                       const T go = g[r * Fo + o];
                       if (db) db[o] += go;
                       if (dw) axpy(dw + o * Fi, x + r * Fi, go, Fi);
                       if (dx) axpy(dx + r * Fi, w + o * Fi, go, Fi);
                     }
                   }
                 });
}

// ---------------------------------------------------------------------------
// dropout

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double p, Mode mode, Rng& rng) {
  require_defined(input, "dropout");
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout: p must lie in [0, 1), got " + std::to_string(p));
  }
  if (mode == Mode::eval || p == 0.0) return input;
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  const auto xs = input.values();
  std::vector<T> mask(xs.size());
  // Two 32-bit uniforms per 64-bit draw.
  constexpr double kInv32 = 1.0 / 4294967296.0;
  for (std::size_t i = 0; i < xs.size(); i += 2) {
    const std::uint64_t bits = rng();
    const double u0 = static_cast<double>(bits >> 32) * kInv32;
    const double u1 = static_cast<double>(bits & 0xffffffffULL) * kInv32;
    mask[i] = u0 >= p ? scale : T{0};
    if (i + 1 < xs.size()) mask[i + 1] = u1 >= p ? scale : T{0};
  }
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] * mask[i];
  const bool record = should_record({&input});
  if (!record) mask.clear();
  return emit<T>(input.shape(), std::move(out), "dropout", record, {input.node()},
                 [mask = std::move(mask)](Node<T>& self) {
                   Node<T>& in = *self.inputs[0];
                   const T* g = self.grad.data();
                   T* dx = in.grad_buffer().data();
                   for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += g[i] * mask[i];
                 });
}

// ---------------------------------------------------------------------------
// cosine similarity

template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b, double eps) {
  require_defined(a, "cosine_similarity");
  require_defined(b, "cosine_similarity");
  if (a.shape() != b.shape()) {
    shape_fail("cosine_similarity", "shapes differ: " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
  }
  if (a.rank() != 1 && a.rank() != 2) shape_fail("cosine_similarity", "inputs must be [F] or [B, F]");
  const std::size_t R = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t F = a.shape().back();
  const T* x = a.values().data();
  const T* y = b.values().data();
  std::vector<T> out(R);
  // Per row: dot, |a|, |b|.
  std::vector<double> stats(3 * R);
  for (std::size_t r = 0; r < R; ++r) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      const double u = x[r * F + f];
      const double v = y[r * F + f];
      d += u * v;
      na += u * u;
      nb += v * v;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    stats[3 * r] = d;
    stats[3 * r + 1] = na;
    stats[3 * r + 2] = nb;
    out[r] = static_cast<T>(d / (std::max(na, eps) * std::max(nb, eps)));
  }
  const bool record = should_record({&a, &b});
  return emit<T>({R}, std::move(out), "cosine_similarity", record, {a.node(), b.node()},
                 [R, F, eps, stats = std::move(stats)](Node<T>& self) {
                   Node<T>& an = *self.inputs[0];
                   Node<T>& bn = *self.inputs[1];
                   const T* x = an.value.data();
                   const T* y = bn.value.data();
                   const T* g = self.grad.data();
                   T* dx = an.requires_grad ? an.grad_buffer().data() : nullptr;
                   T* dy = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
                   for (std::size_t r = 0; r < R; ++r) {
                     const double d = stats[3 * r];
                     const double na = stats[3 * r + 1];
                     const double nb = stats[3 * r + 2];
                     const double da = std::max(na, eps);
                     const double db = std::max(nb, eps);
                     const double c = d / (da * db);
                     const double gr = g[r];
                     // The eps clamp is constant below the threshold, so the
                     // norm term only contributes when the norm is active.
                     const double ka = na > eps ? c / (na * na) : 0.0;
                     const double kb = nb > eps ? c / (nb * nb) : 0.0;
                     for (std::size_t f = 0; f < F; ++f) {
                       const double u = x[r * F + f];
                       const double v = y[r * F + f];
                       if (dx) dx[r * F + f] += static_cast<T>(gr * (v / (da * db) - ka * u));
                       if (dy) dy[r * F + f] += static_cast<T>(gr * (u / (da * db) - kb * v));
                     }
                   }
                 });
}

// ---------------------------------------------------------------------------
// losses and plumbing

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
  require_defined(prediction, "mse_loss");
  require_defined(target, "mse_loss");
  if (prediction.shape() != target.shape()) {
    shape_fail("mse_loss", "prediction " + shape_string(prediction.shape()) + " vs target " +
                               shape_string(target.shape()));
  }
  const auto p = prediction.values();
  const auto t = target.values();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - t[i];
    s += d * d;
  }
  const double n = static_cast<double>(p.size());
  const bool record = should_record({&prediction, &target});
  return emit<T>({1}, {static_cast<T>(s / n)}, "mse_loss", record,
                 {prediction.node(), target.node()}, [n](Node<T>& self) {
                   Node<T>& pn = *self.inputs[0];
                   Node<T>& tn = *self.inputs[1];
                   const double g = self.grad[0];
                   T* dp = pn.requires_grad ? pn.grad_buffer().data() : nullptr;
                   T* dt = tn.requires_grad ? tn.grad_buffer().data() : nullptr;
                   for (std::size_t i = 0; i < pn.value.size(); ++i) {
                     const double d = 2.0 * (static_cast<double>(pn.value[i]) - tn.value[i]) / n * g;
                     if (dp) dp[i] += static_cast<T>(d);
                     if (dt) dt[i] -= static_cast<T>(d);
                   }
                 });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  if (a.shape() != b.shape()) {
    shape_fail("add", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const auto x = a.values();
  const auto y = b.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  const bool record = should_record({&a, &b});
  return emit<T>(a.shape(), std::move(out), "add", record, {a.node(), b.node()},
                 [](Node<T>& self) {
                   for (auto& in : self.inputs) {
                     if (!in->requires_grad) continue;
                     auto& dx = in->grad_buffer();
                     for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
                   }
                 });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& input, double factor) {
  require_defined(input, "scale");
  const auto v = input.values();
  const T f = static_cast<T>(factor);
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * f;
  const bool record = should_record({&input});
  return emit<T>(input.shape(), std::move(out), "scale", record, {input.node()}, [f](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += f * self.grad[i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
  require_defined(input, "reshape");
  if (shape_numel(shape) != input.numel()) {
    shape_fail("reshape", shape_string(input.shape()) + " -> " + shape_string(shape));
  }
  const auto v = input.values();
  const bool record = should_record({&input});
  return emit<T>(std::move(shape), std::vector<T>(v.begin(), v.end()), "reshape", record,
                 {input.node()}, [](Node<T>& self) {
                   auto& dx = self.inputs[0]->grad_buffer();
                   for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
                 });
}

template <typename T>
void sgd_step(std::span<Tensor<T>> params, double lr) {
  const T step = static_cast<T>(lr);
  for (auto& p : params) {
    if (!p.requires_grad()) continue;
    auto v = p.mutable_values();
    auto g = p.mutable_grad();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= step * g[i];
      g[i] = T{0};
    }
  }
}

#define MPA_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,  \
                            std::size_t);                                                       \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,  \
                            std::size_t);                                                       \
  template Tensor<T> batchnorm1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                 BatchNormState<T>&, Mode, double, double);                     \
  template Tensor<T> relu(const Tensor<T>&);                                                    \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                      \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> adaptive_avg_pool2d(const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> temporal_mean(const Tensor<T>&);                                           \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&);                             \
  template Tensor<T> cosine_similarity(const Tensor<T>&, const Tensor<T>&, double);             \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                          \
  template Tensor<T> scale(const Tensor<T>&, double);                                           \
  template void sgd_step(std::span<Tensor<T>>, double);

MPA_INSTANTIATE_OPS(float)
MPA_INSTANTIATE_OPS(double)

#undef MPA_INSTANTIATE_OPS

}  // namespace mpa::tensor
