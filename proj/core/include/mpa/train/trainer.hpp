#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpa/data/dataset.hpp"
#include "mpa/models/model.hpp"
#include "mpa/train/inputs.hpp"

namespace mpa::train {

// Training runs in single precision; gradient checks use the double build of
// the same models.
using Scalar = float;

inline constexpr double kDefaultLearningRate = 0.05;
inline constexpr std::size_t kDefaultBatchSize = 8;
inline constexpr std::size_t kDefaultMaxEpochs = 300;
inline constexpr std::size_t kDefaultPatience = 100;

struct TrainConfig {
  models::ModelSpec spec;
  double lr = kDefaultLearningRate;
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t max_epochs = kDefaultMaxEpochs;
  std::size_t patience = kDefaultPatience;
  std::optional<std::size_t> dtw_band;
  // dist_mat batches are split into micro-batches of this size to bound
  // activation memory; gradients are identical to a whole-batch step up to
  // float rounding. 0 processes the batch at once.
  std::size_t micro_batch = 4;
  std::size_t matrix_cache_bytes = std::size_t{768} << 20;

  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tracks the best validation loss; epochs are counted from 1.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when `loss` is a strict improvement on the best so far.
  bool observe(double loss);
  bool should_stop() const { return since_best_ >= patience_; }
  double best_loss() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_seen() const { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

// Throws TrainingDiverged on a non-finite loss or when the loss stays above
// `factor` times the first observed value for `window` consecutive epochs.
class DivergenceGuard {
 public:
  explicit DivergenceGuard(double factor = 10.0, std::size_t window = 5);
  void observe(double loss);

 private:
  double factor_;
  std::size_t window_;
  std::optional<double> initial_;
  std::size_t streak_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
  // Eval-mode MSE over the training records (start-0 chunks) before and
  // after training.
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
};

struct TrainResult {
  std::unique_ptr<models::Model<Scalar>> model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

TrainResult train(const data::Dataset& dataset, const data::DatasetSplit& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Which chunk starts prediction averages over for the sequence models.
enum class ChunkPolicy { first_only, grid };

// One prediction per record, in eval mode.
std::vector<double> predict(models::Model<Scalar>& model, std::span<const PreparedRecord> records,
                            ChunkPolicy policy, MatrixCache* cache = nullptr);

struct Evaluation {
  std::vector<double> predictions;
  std::vector<double> targets;
  double r2 = 0.0;
};

// Grid-averaged predictions on `indices` scored with R² against the model's
// criterion.
Evaluation evaluate(models::Model<Scalar>& model, const data::Dataset& dataset,
                    std::span<const std::size_t> indices, const TrainConfig& config);

// The partition every run on `dataset` uses, seeded from the dataset seed.
data::DatasetSplit default_split(const data::Dataset& dataset);

}  // namespace mpa::train
