#include "mpa/train/inputs.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpa::train {

std::vector<std::vector<double>> expand_scores(const data::Dataset& dataset) {
  std::vector<std::vector<double>> out;
  out.reserve(dataset.scores.size());
  for (const auto& s : dataset.scores) out.push_back(signal::expand_score_to_ticks(s.score));
  return out;
}

PreparedRecord prepare_single(const std::vector<double>& contour, const std::vector<double>& ticks,
                              bool align, std::optional<std::size_t> dtw_band) {
  if (contour.empty()) throw std::invalid_argument("empty contour");
  if (ticks.empty()) throw std::invalid_argument("empty score");
  PreparedRecord p;
  p.contour = &contour;
  p.ticks = &ticks;
  if (align) {
    align::DtwOptions opt;
    opt.band_radius = dtw_band;
    p.path = align::PathIndex(align::dtw_align(contour, ticks, opt));
  }
  return p;
}

std::vector<PreparedRecord> prepare_records(const data::Dataset& dataset,
                                            const std::vector<std::vector<double>>& ticks,
                                            std::span<const std::size_t> indices,
                                            const PrepareOptions& options) {
  std::vector<PreparedRecord> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    const auto& rec = dataset.records.at(i);
    auto p = prepare_single(rec.contour.frames, ticks.at(dataset.score_index(rec)), options.align,
                            options.dtw_band);
    p.index = i;
    p.target = rec.ratings.get(options.criterion);
    out.push_back(std::move(p));
  }
  return out;
}

ChunkPair chunk_pair(const PreparedRecord& record, std::size_t start, std::size_t length) {
  const auto& frames = *record.contour;
  const std::size_t L = frames.size();
  if (start >= L) throw std::out_of_range("chunk start beyond contour end");
  if (record.path.frames() != L) throw std::logic_error("record was prepared without alignment");
  ChunkPair out;
  out.contour.assign(length, 0.0);
  const std::size_t end = std::min(L, start + length);
  for (std::size_t i = start; i < end; ++i) out.contour[i - start] = signal::normalize_pitch(frames[i]);

  const auto range = record.path.lookup(start, end - 1);
  const auto& ticks = *record.ticks;
  const std::span<const double> snippet(ticks.data() + range.start_tick, range.end_tick - range.start_tick + 1);
  // Only the frames actually present are matched to the snippet; padding stays silent.
  auto matched = signal::resample_step(snippet, end - start);
  out.score.assign(length, 0.0);
  for (std::size_t i = 0; i < matched.size(); ++i) out.score[i] = signal::normalize_pitch(matched[i]);
  return out;
}

std::size_t random_chunk_start(std::size_t contour_frames, std::size_t length, Rng& rng) {
  if (contour_frames <= length) return 0;
  return std::uniform_int_distribution<std::size_t>(0, contour_frames - length)(rng);
}

std::vector<std::size_t> chunk_grid(std::size_t contour_frames, std::size_t length) {
  if (length == 0) throw std::invalid_argument("chunk length must be positive");
  std::vector<std::size_t> starts{0};
  if (contour_frames <= length) return starts;
  const std::size_t stride = std::max<std::size_t>(1, length / 2);
  const std::size_t last = contour_frames - length;
  for (std::size_t s = stride; s <= last; s += stride) starts.push_back(s);
  if (starts.back() != last) starts.push_back(last);
  return starts;
}

template <typename T>
models::ModelInput<T> make_chunk_batch(std::span<const ChunkPair> pairs, models::ModelKind kind) {
  if (pairs.empty()) throw std::invalid_argument("empty batch");
  const std::size_t B = pairs.size();
  const std::size_t N = pairs[0].contour.size();
  for (const auto& p : pairs) {
    if (p.contour.size() != N || p.score.size() != N) throw std::invalid_argument("ragged chunk batch");
  }
  models::ModelInput<T> in;
  if (kind == models::ModelKind::si_convnet) {
    std::vector<T> v(B * 2 * N);
    for (std::size_t b = 0; b < B; ++b) {
      std::copy(pairs[b].contour.begin(), pairs[b].contour.end(), v.begin() + static_cast<std::ptrdiff_t>(b * 2 * N));
      std::copy(pairs[b].score.begin(), pairs[b].score.end(), v.begin() + static_cast<std::ptrdiff_t>((b * 2 + 1) * N));
    }
    in.stacked = tensor::Tensor<T>::from_values({B, 2, N}, std::move(v));
    return in;
  }
  if (kind == models::ModelKind::dist_mat) throw std::invalid_argument("dist_mat does not take chunks");
  std::vector<T> c(B * N);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy(pairs[b].contour.begin(), pairs[b].contour.end(), c.begin() + static_cast<std::ptrdiff_t>(b * N));
  }
  in.contour = tensor::Tensor<T>::from_values({B, 1, N}, std::move(c));
  if (kind == models::ModelKind::joint_embed) {
    std::vector<T> s(B * N);
    for (std::size_t b = 0; b < B; ++b) {
      std::copy(pairs[b].score.begin(), pairs[b].score.end(), s.begin() + static_cast<std::ptrdiff_t>(b * N));
    }
    in.score = tensor::Tensor<T>::from_values({B, 1, N}, std::move(s));
  }
  return in;
}

template <typename T>
models::ModelInput<T> make_matrix_batch(std::span<const signal::DistanceMatrix* const> matrices) {
  if (matrices.empty()) throw std::invalid_argument("empty batch");
  const std::size_t S = matrices[0]->resolution;
  std::vector<T> v;
  v.reserve(matrices.size() * S * S);
  for (const auto* m : matrices) {
    if (m->resolution != S) throw std::invalid_argument("mixed matrix resolutions in batch");
    for (double x : m->cells) v.push_back(static_cast<T>(x));
  }
  models::ModelInput<T> in;
  in.matrix = tensor::Tensor<T>::from_values({matrices.size(), 1, S, S}, std::move(v));
  return in;
}

MatrixCache::MatrixCache(std::size_t resolution, std::size_t budget_bytes)
    : resolution_(resolution),
      capacity_(budget_bytes / std::max<std::size_t>(1, resolution * resolution * sizeof(double))) {}

const signal::DistanceMatrix& MatrixCache::get(const PreparedRecord& record) {
  if (auto it = entries_.find(record.index); it != entries_.end()) {
    order_.splice(order_.begin(), order_, it->second.second);
    return it->second.first;
  }
  auto m = signal::build_distance_matrix(*record.contour, *record.ticks, resolution_);
  if (capacity_ == 0) {
    scratch_ = std::move(m);
    return scratch_;
  }
  if (entries_.size() >= capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(record.index);
  auto [it, _] = entries_.emplace(record.index, std::make_pair(std::move(m), order_.begin()));
  return it->second.first;
}

template models::ModelInput<float> make_chunk_batch(std::span<const ChunkPair>, models::ModelKind);
template models::ModelInput<double> make_chunk_batch(std::span<const ChunkPair>, models::ModelKind);
template models::ModelInput<float> make_matrix_batch(std::span<const signal::DistanceMatrix* const>);
template models::ModelInput<double> make_matrix_batch(std::span<const signal::DistanceMatrix* const>);

}  // namespace mpa::train
