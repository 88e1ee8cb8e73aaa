#pragma once

// Differentiable layer set used by the assessment models. Every op accepts an
// optional leading batch axis where noted; shapes are validated eagerly and
// mismatches raise ShapeError.

#include <span>
#include <vector>

#include "mpa/rng.hpp"
#include "mpa/tensor/tensor.hpp"

namespace mpa::tensor {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kCosineEps = 1e-8;

// input [C_in, L] or [B, C_in, L]; weight [C_out, C_in, K]; bias [C_out].
template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t padding = 0);

// input [C_in, H, W] or [B, C_in, H, W]; weight [C_out, C_in, KH, KW]; bias [C_out].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t padding = 0);

template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T{0}), running_var(channels, T{1}) {}
};

// input [B, C, L]. Train mode normalizes with the batch statistics of each
// channel (biased variance) and folds them into `state` (unbiased variance);
// eval mode normalizes with `state`.
template <typename T>
Tensor<T> batchnorm1d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, Mode mode, double eps = kBatchNormEps,
                      double momentum = kBatchNormMomentum);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, double slope = kLeakySlope);

// Non-overlapping window x window max pooling on [C, H, W] or [B, C, H, W].
// Trailing rows and columns that do not fill a window are dropped.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window = 3);

// [B, C, H, W] -> [B, C, out_h, out_w]; bin i spans
// [floor(i*H/out_h), ceil((i+1)*H/out_h)).
template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& input, std::size_t out_h, std::size_t out_w);

// Mean over the last axis: [B, C, L] -> [B, C].
template <typename T>
Tensor<T> temporal_mean(const Tensor<T>& input);

// Affine map over the last axis.
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

// Inverted dropout. Eval mode and p == 0 return the input unchanged.
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double p, Mode mode, Rng& rng);

// [F] x [F] -> [1] or [B, F] x [B, F] -> [B].
template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b, double eps = kCosineEps);

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

// Elementwise multiplication by a constant.
template <typename T>
Tensor<T> scale(const Tensor<T>& input, double factor);

// p <- p - lr * grad(p), then grad(p) <- 0.
template <typename T>
void sgd_step(std::span<Tensor<T>> params, double lr);

}  // namespace mpa::tensor
