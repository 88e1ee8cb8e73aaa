#include "mpa/align/dtw.hpp"

#include <algorithm>
#include <string>

namespace mpa::align {

WarpPath backtrack(const CostTable& table) {
  const std::size_t T = table.cols;
  WarpPath path;
  path.total_cost = table.at(table.rows - 1, T - 1);
  std::size_t i = table.rows - 1;
  std::size_t j = T - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Candidates in preference order; strict '<' keeps the earlier on ties.
    std::size_t bi = i, bj = j;
    double best = std::numeric_limits<double>::infinity();
    if (i > 0 && j > 0) {
      best = table.at(i - 1, j - 1);
      bi = i - 1;
      bj = j - 1;
    }
    if (i > 0 && table.at(i - 1, j) < best) {
      best = table.at(i - 1, j);
      bi = i - 1;
      bj = j;
    }
    if (j > 0 && table.at(i, j - 1) < best) {
      best = table.at(i, j - 1);
      bi = i;
      bj = j - 1;
    }
    i = bi;
    j = bj;
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

WarpPath dtw_align(std::span<const double> contour, std::span<const double> ticks,
                   const DtwOptions& options) {
  return dtw_align(contour, ticks, absolute_difference, options);
}

TickRange map_chunk_to_snippet(const WarpPath& path, std::size_t start_frame, std::size_t end_frame) {
  if (path.pairs.empty()) throw std::invalid_argument("map_chunk_to_snippet: empty path");
  if (start_frame > end_frame) throw std::invalid_argument("map_chunk_to_snippet: start after end");
  const std::size_t last_frame = path.pairs.back().first;
  if (end_frame > last_frame) {
    throw std::invalid_argument("map_chunk_to_snippet: frame " + std::to_string(end_frame) +
                                " outside path (last frame " + std::to_string(last_frame) + ")");
  }
  TickRange r{std::numeric_limits<std::size_t>::max(), 0};
  for (const auto& [f, t] : path.pairs) {
    if (f == start_frame) r.start_tick = std::min(r.start_tick, t);
    if (f == end_frame) r.end_tick = std::max(r.end_tick, t);
  }
  return r;
}

PathIndex::PathIndex(const WarpPath& path) {
  if (path.pairs.empty()) throw std::invalid_argument("PathIndex: empty path");
  const std::size_t frames = path.pairs.back().first + 1;
  first_.assign(frames, std::numeric_limits<std::size_t>::max());
  last_.assign(frames, 0);
  for (const auto& [f, t] : path.pairs) {
    first_[f] = std::min(first_[f], t);
    last_[f] = std::max(last_[f], t);
  }
}

TickRange PathIndex::lookup(std::size_t start_frame, std::size_t end_frame) const {
  if (start_frame > end_frame || end_frame >= first_.size()) {
    throw std::invalid_argument("PathIndex: frame range outside path");
  }
  return {first_[start_frame], last_[end_frame]};
}

}  // namespace mpa::align
