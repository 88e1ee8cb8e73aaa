#pragma once

// Turns dataset records into model inputs: DTW-aligned contour/score chunks
// for the sequence models and distance matrices for dist_mat.

#include <cstddef>
#include <list>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mpa/align/dtw.hpp"
#include "mpa/data/dataset.hpp"
#include "mpa/models/model.hpp"
#include "mpa/signal/distance_matrix.hpp"

namespace mpa::train {

// A record with everything that does not change between epochs.
struct PreparedRecord {
  std::size_t index = 0;  // position in Dataset::records
  const std::vector<double>* contour = nullptr;
  const std::vector<double>* ticks = nullptr;
  align::PathIndex path;  // empty unless aligned
  double target = 0.0;
};

struct PrepareOptions {
  Criterion criterion = Criterion::note_accuracy;
  bool align = true;
  std::optional<std::size_t> dtw_band;
};

// Expanded score ticks for every score of a dataset, in Dataset::scores order.
std::vector<std::vector<double>> expand_scores(const data::Dataset& dataset);

// `ticks` must outlive the returned records, as must `dataset`.
std::vector<PreparedRecord> prepare_records(const data::Dataset& dataset,
                                            const std::vector<std::vector<double>>& ticks,
                                            std::span<const std::size_t> indices,
                                            const PrepareOptions& options);

PreparedRecord prepare_single(const std::vector<double>& contour, const std::vector<double>& ticks,
                              bool align, std::optional<std::size_t> dtw_band = {});

// Normalized contour chunk and its DTW-matched score snippet resampled to the
// chunk length.
struct ChunkPair {
  std::vector<double> contour;
  std::vector<double> score;
};

ChunkPair chunk_pair(const PreparedRecord& record, std::size_t start, std::size_t length);

// Uniform start in [0, L - N]; 0 when the contour is shorter than the chunk.
std::size_t random_chunk_start(std::size_t contour_frames, std::size_t length, Rng& rng);

// Starts 0, N/2, N, ... while the chunk fits, plus a final chunk ending at
// the last frame if the grid leaves a tail uncovered.
std::vector<std::size_t> chunk_grid(std::size_t contour_frames, std::size_t length);

template <typename T>
models::ModelInput<T> make_chunk_batch(std::span<const ChunkPair> pairs, models::ModelKind kind);

template <typename T>
models::ModelInput<T> make_matrix_batch(std::span<const signal::DistanceMatrix* const> matrices);

// Distance matrices built on demand and kept while they fit the byte budget.
class MatrixCache {
 public:
  MatrixCache(std::size_t resolution, std::size_t budget_bytes);

  const signal::DistanceMatrix& get(const PreparedRecord& record);
  std::size_t resolution() const { return resolution_; }

 private:
  std::size_t resolution_;
  std::size_t capacity_;
  std::list<std::size_t> order_;
  std::unordered_map<std::size_t, std::pair<signal::DistanceMatrix, std::list<std::size_t>::iterator>> entries_;
  signal::DistanceMatrix scratch_;
};

}  // namespace mpa::train
