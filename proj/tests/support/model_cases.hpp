#pragma once

// Randomized gradient-check instances of the full models at double
// precision, on inputs small enough to check quickly.

#include <cstdint>
#include <vector>

#include "gradcheck.hpp"
#include "mpa/models/model.hpp"

namespace mpa::testing {

inline models::ModelSpec gradcheck_spec(models::ModelKind kind, std::uint64_t seed) {
  models::ModelSpec s;
  s.kind = kind;
  s.seed = seed;
  s.chunk_seconds = 0.2;  // 34 frames, above the 25-frame receptive field
  s.pooled_grid = 1;
  s.matrix_resolution = 27;
  return s;
}

inline std::vector<double> unit_values(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Instance `seed`: weights initialised from the seed, a batch of three random
// inputs in [0, 1], MSE against random targets, fixed dropout masks.
inline GradCheckResult model_gradcheck(models::ModelKind kind, std::uint64_t seed, std::size_t sample = 0) {
  using tensor::Tensor;
  const auto spec = gradcheck_spec(kind, seed);
  auto model = models::build_model<double>(spec);
  Rng rng(100 + seed);
  constexpr std::size_t batch = 3;
  const std::size_t n = models::chunk_length(spec);
  const std::size_t s = spec.matrix_resolution;
  models::ModelInput<double> in;
  in.contour = Tensor<double>::from_values({batch, 1, n}, unit_values(batch * n, rng));
  in.score = Tensor<double>::from_values({batch, 1, n}, unit_values(batch * n, rng));
  in.stacked = Tensor<double>::from_values({batch, 2, n}, unit_values(batch * 2 * n, rng));
  in.matrix = Tensor<double>::from_values({batch, 1, s, s}, unit_values(batch * s * s, rng));
  const auto target = Tensor<double>::from_values({batch}, unit_values(batch, rng));
  auto loss = [&] {
    Rng dropout(7);
    return tensor::mse_loss(model->forward(in, tensor::Mode::train, dropout), target);
  };
  return gradcheck(loss, model->parameter_tensors(), 1e-5, sample, seed);
}

}  // namespace mpa::testing
