#include <benchmark/benchmark.h>

#include <random>

#include "mpa/align/dtw.hpp"
#include "mpa/data/generator.hpp"
#include "mpa/models/model.hpp"
#include "mpa/signal/distance_matrix.hpp"
#include "mpa/tensor/ops.hpp"

namespace {

using mpa::tensor::Mode;
using mpa::tensor::Tensor;

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// args: batch, in channels, out channels, length
void BM_Conv1dForward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto ci = static_cast<std::size_t>(state.range(1));
  const auto co = static_cast<std::size_t>(state.range(2));
  const auto n = static_cast<std::size_t>(state.range(3));
  auto x = Tensor<float>::from_values({b, ci, n}, noise(b * ci * n, 1));
  auto w = Tensor<float>::from_values({co, ci, 7}, noise(co * ci * 7, 2));
  auto bias = Tensor<float>::from_values({co}, noise(co, 3));
  mpa::tensor::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(mpa::tensor::conv1d(x, w, bias, 1, 3));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b * ci * co * n * 7));
}
BENCHMARK(BM_Conv1dForward)->Args({32, 2, 4, 1722})->Args({32, 8, 16, 1722})->Args({32, 16, 16, 1722});

void BM_Conv1dBackward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto ci = static_cast<std::size_t>(state.range(1));
  const auto co = static_cast<std::size_t>(state.range(2));
  const auto n = static_cast<std::size_t>(state.range(3));
  auto x = Tensor<float>::from_values({b, ci, n}, noise(b * ci * n, 1), true);
  auto w = Tensor<float>::from_values({co, ci, 7}, noise(co * ci * 7, 2), true);
  auto bias = Tensor<float>::from_values({co}, noise(co, 3), true);
  for (auto _ : state) {
    auto y = mpa::tensor::temporal_mean(mpa::tensor::conv1d(x, w, bias, 1, 3));
    auto loss = mpa::tensor::mse_loss(mpa::tensor::reshape(y, {b * co}), Tensor<float>::zeros({b * co}));
    loss.backward();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b * ci * co * n * 7));
}
BENCHMARK(BM_Conv1dBackward)->Args({32, 8, 16, 1722})->Args({32, 16, 16, 1722});

void BM_Conv2dForward(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  auto x = Tensor<float>::from_values({1, 4, s, s}, noise(4 * s * s, 1));
  auto w = Tensor<float>::from_values({4, 4, 3, 3}, noise(144, 2));
  auto bias = Tensor<float>::from_values({4}, noise(4, 3));
  mpa::tensor::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(mpa::tensor::conv2d(x, w, bias, 1, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 16 * 9 * s * s));
}
BENCHMARK(BM_Conv2dForward)->Arg(297)->Arg(600);

void BM_BatchNormTrain(benchmark::State& state) {
  auto x = Tensor<float>::from_values({32, 16, 1722}, noise(32 * 16 * 1722, 1), true);
  auto g = Tensor<float>::full({16}, 1.0f, true);
  auto b = Tensor<float>::zeros({16}, true);
  mpa::tensor::BatchNormState<float> st(16);
  for (auto _ : state) {
    auto y = mpa::tensor::temporal_mean(mpa::tensor::batchnorm1d(x, g, b, st, Mode::train));
    mpa::tensor::mse_loss(mpa::tensor::reshape(y, {512}), Tensor<float>::zeros({512})).backward();
  }
}
BENCHMARK(BM_BatchNormTrain);

void BM_Dtw(benchmark::State& state) {
  mpa::Rng rng(1);
  const auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
  const auto contour = mpa::data::render_performance(score, {0.05, 0.2, 0.1, 0.02}, rng);
  const auto ticks = mpa::signal::expand_score_to_ticks(score);
  for (auto _ : state) benchmark::DoNotOptimize(mpa::align::dtw_align(contour.frames, ticks));
  state.counters["cells"] = static_cast<double>(contour.size() * ticks.size());
}
BENCHMARK(BM_Dtw)->Unit(benchmark::kMillisecond);

void BM_DistanceMatrix(benchmark::State& state) {
  mpa::Rng rng(1);
  const auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
  const auto contour = mpa::data::render_performance(score, {0.05, 0.2, 0.1, 0.02}, rng);
  const auto s = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpa::signal::build_distance_matrix(contour, score, s));
}
BENCHMARK(BM_DistanceMatrix)->Arg(400)->Arg(600)->Arg(900)->Unit(benchmark::kMillisecond);

// Forward + backward of one training batch.
void BM_ModelStep(benchmark::State& state) {
  mpa::models::ModelSpec spec;
  spec.kind = static_cast<mpa::models::ModelKind>(state.range(0));
  spec.matrix_resolution = static_cast<std::size_t>(state.range(1));
  const std::size_t b = spec.kind == mpa::models::ModelKind::dist_mat ? 4 : 32;
  auto model = mpa::models::build_model<float>(spec);
  const std::size_t n = mpa::models::chunk_length(spec);
  const std::size_t s = spec.matrix_resolution;
  mpa::models::ModelInput<float> in;
  in.contour = Tensor<float>::from_values({b, 1, n}, noise(b * n, 1));
  in.score = Tensor<float>::from_values({b, 1, n}, noise(b * n, 2));
  in.stacked = Tensor<float>::from_values({b, 2, n}, noise(2 * b * n, 3));
  if (spec.kind == mpa::models::ModelKind::dist_mat) {
    in.matrix = Tensor<float>::from_values({b, 1, s, s}, noise(b * s * s, 4));
  }
  const auto target = Tensor<float>::zeros({b});
  mpa::Rng rng(5);
  for (auto _ : state) {
    mpa::tensor::mse_loss(model->forward(in, Mode::train, rng), target).backward();
    model->zero_grad();
  }
  state.SetLabel(std::string(mpa::models::to_string(spec.kind)) + " batch " + std::to_string(b));
}
BENCHMARK(BM_ModelStep)
    ->Args({0, 600})
    ->Args({1, 600})
    ->Args({3, 600})
    ->Args({2, 297})
    ->Args({2, 600})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
