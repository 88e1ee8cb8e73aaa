#include "mpa/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpa/train/metrics.hpp"

namespace mpa::train {

namespace {

using models::ModelKind;
using tensor::Mode;
using tensor::Tensor;

constexpr std::size_t kEvalBatchChunks = 32;
constexpr std::size_t kEvalBatchMatrices = 4;

Tensor<Scalar> target_tensor(std::span<const PreparedRecord* const> recs) {
  std::vector<Scalar> t;
  t.reserve(recs.size());
  for (const auto* r : recs) t.push_back(static_cast<Scalar>(r->target));
  return Tensor<Scalar>::from_values({recs.size()}, std::move(t));
}

std::vector<double> targets_of(std::span<const PreparedRecord> recs) {
  std::vector<double> t;
  t.reserve(recs.size());
  for (const auto& r : recs) t.push_back(r.target);
  return t;
}

// One SGD step on `batch`; returns the batch MSE.
double train_step(models::Model<Scalar>& model, const TrainConfig& cfg,
                  std::span<const PreparedRecord* const> batch, MatrixCache* cache, Rng& chunk_rng,
                  Rng& dropout_rng) {
  const auto kind = cfg.spec.kind;
  double loss_value = 0.0;
  if (models::is_chunked(kind)) {
    const std::size_t N = models::chunk_length(cfg.spec);
    std::vector<ChunkPair> pairs;
    pairs.reserve(batch.size());
    for (const auto* r : batch) {
      pairs.push_back(chunk_pair(*r, random_chunk_start(r->contour->size(), N, chunk_rng), N));
    }
    auto input = make_chunk_batch<Scalar>(pairs, kind);
    auto loss = tensor::mse_loss(model.forward(input, Mode::train, dropout_rng), target_tensor(batch));
    loss_value = loss.item();
    loss.backward();
  } else {
    // No batch statistics in dist_mat, so micro-batches weighted by their
    // share of the batch give the whole-batch gradient.
    const std::size_t B = batch.size();
    const std::size_t step = cfg.micro_batch == 0 ? B : cfg.micro_batch;
    for (std::size_t lo = 0; lo < B; lo += step) {
      const std::size_t hi = std::min(B, lo + step);
      const auto part = batch.subspan(lo, hi - lo);
      std::vector<const signal::DistanceMatrix*> mats;
      // The cache may evict while a batch is assembled, so keep copies.
      std::vector<signal::DistanceMatrix> owned;
      owned.reserve(part.size());
      for (const auto* r : part) owned.push_back(cache->get(*r));
      for (const auto& m : owned) mats.push_back(&m);
      auto input = make_matrix_batch<Scalar>(mats);
      const double share = static_cast<double>(part.size()) / static_cast<double>(B);
      auto loss = tensor::scale(tensor::mse_loss(model.forward(input, Mode::train, dropout_rng), target_tensor(part)),
                                share);
      loss_value += loss.item();
      loss.backward();
    }
  }
  auto params = model.parameter_tensors();
  tensor::sgd_step<Scalar>(params, cfg.lr);
  return loss_value;
}

}  // namespace

void TrainConfig::validate() const {
  models::validate_spec(spec);
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw std::invalid_argument("patience must be at least 1");
}

bool EarlyStopping::observe(double loss) {
  ++epoch_;
  if (loss < best_) {
    best_ = loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

DivergenceGuard::DivergenceGuard(double factor, std::size_t window) : factor_(factor), window_(window) {}

void DivergenceGuard::observe(double loss) {
  if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite");
  if (!initial_) {
    initial_ = loss;
    return;
  }
  streak_ = loss > factor_ * *initial_ ? streak_ + 1 : 0;
  if (streak_ >= window_) {
    throw TrainingDiverged("training loss above " + std::to_string(factor_) + "x its initial value (" +
                           std::to_string(*initial_) + ") for " + std::to_string(window_) + " epochs");
  }
}

std::vector<double> predict(models::Model<Scalar>& model, std::span<const PreparedRecord> records,
                            ChunkPolicy policy, MatrixCache* cache) {
  tensor::NoGradGuard no_grad;
  Rng unused(0);
  const auto& spec = model.spec();
  std::vector<double> out(records.size(), 0.0);
  if (!models::is_chunked(spec.kind)) {
    if (cache == nullptr) throw std::invalid_argument("dist_mat prediction needs a matrix cache");
    for (std::size_t lo = 0; lo < records.size(); lo += kEvalBatchMatrices) {
      const std::size_t hi = std::min(records.size(), lo + kEvalBatchMatrices);
      std::vector<signal::DistanceMatrix> owned;
      for (std::size_t i = lo; i < hi; ++i) owned.push_back(cache->get(records[i]));
      std::vector<const signal::DistanceMatrix*> mats;
      for (const auto& m : owned) mats.push_back(&m);
      auto y = model.forward(make_matrix_batch<Scalar>(mats), Mode::eval, unused);
      for (std::size_t i = lo; i < hi; ++i) out[i] = static_cast<double>(y.values()[i - lo]);
    }
    return out;
  }

  const std::size_t N = models::chunk_length(spec);
  struct Job {
    std::size_t record;
    std::size_t start;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> counts(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto starts = policy == ChunkPolicy::grid ? chunk_grid(records[i].contour->size(), N)
                                                    : std::vector<std::size_t>{0};
    for (auto s : starts) jobs.push_back({i, s});
    counts[i] = starts.size();
  }
  for (std::size_t lo = 0; lo < jobs.size(); lo += kEvalBatchChunks) {
    const std::size_t hi = std::min(jobs.size(), lo + kEvalBatchChunks);
    std::vector<ChunkPair> pairs;
    for (std::size_t j = lo; j < hi; ++j) pairs.push_back(chunk_pair(records[jobs[j].record], jobs[j].start, N));
    auto y = model.forward(make_chunk_batch<Scalar>(pairs, spec.kind), Mode::eval, unused);
    for (std::size_t j = lo; j < hi; ++j) out[jobs[j].record] += static_cast<double>(y.values()[j - lo]);
  }
  for (std::size_t i = 0; i < records.size(); ++i) out[i] /= static_cast<double>(counts[i]);
  return out;
}

data::DatasetSplit default_split(const data::Dataset& dataset) {
  Rng rng = make_rng(dataset.config.seed, streams::split);
  return data::split_dataset(dataset.records.size(), rng);
}

TrainResult train(const data::Dataset& dataset, const data::DatasetSplit& split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (split.validation.empty()) throw std::invalid_argument("validation split is empty");
  if (split.train.size() < 2) throw std::invalid_argument("need at least two training records");

  const auto& spec = cfg.spec;
  const bool chunked = models::is_chunked(spec.kind);
  const auto ticks = expand_scores(dataset);
  const PrepareOptions prep{spec.criterion, chunked, cfg.dtw_band};
  const auto train_recs = prepare_records(dataset, ticks, split.train, prep);
  const auto val_recs = prepare_records(dataset, ticks, split.validation, prep);
  const auto train_targets = targets_of(train_recs);
  const auto val_targets = targets_of(val_recs);

  std::unique_ptr<MatrixCache> cache;
  if (!chunked) cache = std::make_unique<MatrixCache>(spec.matrix_resolution, cfg.matrix_cache_bytes);

  TrainResult result;
  result.model = models::build_model<Scalar>(spec);
  auto& model = *result.model;
  model.zero_grad();
  auto& hist = result.history;
  hist.initial_train_mse =
      mean_squared_error(predict(model, train_recs, ChunkPolicy::first_only, cache.get()), train_targets);

  Rng shuffle_rng = make_rng(spec.seed, streams::shuffle);
  Rng chunk_rng = make_rng(spec.seed, streams::chunking);
  Rng dropout_rng = make_rng(spec.seed, streams::dropout);

  EarlyStopping stopper(cfg.patience);
  DivergenceGuard guard;
  auto best_state = model.state();
  std::vector<std::size_t> order(train_recs.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::vector<const PreparedRecord*> batch;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      // A single leftover item cannot form batch statistics; skip it.
      if (hi - lo < 2) break;
      batch.clear();
      for (std::size_t k = lo; k < hi; ++k) batch.push_back(&train_recs[order[k]]);
      const double l = train_step(model, cfg, batch, cache.get(), chunk_rng, dropout_rng);
      loss_sum += l * static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    guard.observe(stats.train_loss);
    stats.validation_loss =
        mean_squared_error(predict(model, val_recs, ChunkPolicy::first_only, cache.get()), val_targets);
    if (!std::isfinite(stats.validation_loss)) throw TrainingDiverged("validation loss became non-finite");
    hist.epochs.push_back(stats);
    if (stopper.observe(stats.validation_loss)) best_state = model.state();
    if (on_epoch) on_epoch(stats);
    if (stopper.should_stop()) {
      hist.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  model.load_state(best_state);
  hist.best_epoch = stopper.best_epoch();
  hist.best_validation_loss = stopper.best_loss();
  hist.final_train_mse =
      mean_squared_error(predict(model, train_recs, ChunkPolicy::first_only, cache.get()), train_targets);
  return result;
}

Evaluation evaluate(models::Model<Scalar>& model, const data::Dataset& dataset,
                    std::span<const std::size_t> indices, const TrainConfig& cfg) {
  const auto& spec = model.spec();
  const bool chunked = models::is_chunked(spec.kind);
  const auto ticks = expand_scores(dataset);
  const auto recs = prepare_records(dataset, ticks, indices, {spec.criterion, chunked, cfg.dtw_band});
  std::unique_ptr<MatrixCache> cache;
  if (!chunked) cache = std::make_unique<MatrixCache>(spec.matrix_resolution, 0);
  Evaluation ev;
  ev.predictions = predict(model, recs, ChunkPolicy::grid, cache.get());
  ev.targets = targets_of(recs);
  ev.r2 = r2(ev.predictions, ev.targets);
  return ev;
}

}  // namespace mpa::train
