#pragma once

// Dynamic time warping between a performance contour and expanded score ticks.
//
// Steps are (1,0), (0,1) and (1,1) with unit weight; the path runs from
// (0, 0) to (L-1, T-1). When several predecessors tie, backtracking prefers
// the diagonal, then (1,0), then (0,1), so paths are deterministic.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mpa::align {

struct WarpPath {
  // (contour_index, score_tick_index), in path order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

struct DtwOptions {
  // Sakoe-Chiba band around the (rescaled) diagonal; unconstrained if empty.
  std::optional<std::size_t> band_radius;
};

inline double absolute_difference(double a, double b) { return std::fabs(a - b); }

using CostFn = std::function<double(double, double)>;

// Cumulative cost table in row-major (L x T) order plus the sizes needed to
// backtrack. Exposed for tests and the path-dump tooling.
struct CostTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cumulative;

  double at(std::size_t i, std::size_t j) const { return cumulative[i * cols + j]; }
};

template <typename Cost>
  requires std::invocable<Cost&, double, double>
CostTable dtw_cost_table(std::span<const double> contour, std::span<const double> ticks,
                         Cost&& cost, const DtwOptions& options = {}) {
  if (contour.empty() || ticks.empty()) throw std::invalid_argument("dtw: empty input sequence");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t L = contour.size();
  const std::size_t T = ticks.size();
  CostTable table{L, T, std::vector<double>(L * T, inf)};
  auto& D = table.cumulative;
  const double slope = L > 1 ? static_cast<double>(T - 1) / static_cast<double>(L - 1) : 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    std::size_t lo = 0;
    std::size_t hi = T;
    if (options.band_radius) {
      const double centre = slope * static_cast<double>(i);
      const double r = static_cast<double>(*options.band_radius);
      lo = static_cast<std::size_t>(std::max(0.0, std::ceil(centre - r)));
      hi = static_cast<std::size_t>(std::min(static_cast<double>(T), std::floor(centre + r) + 1.0));
    }
    for (std::size_t j = lo; j < hi; ++j) {
      const double c = cost(contour[i], ticks[j]);
      if (i == 0 && j == 0) {
        D[0] = c;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = D[(i - 1) * T + (j - 1)];
      if (i > 0) best = std::min(best, D[(i - 1) * T + j]);
      if (j > 0) best = std::min(best, D[i * T + (j - 1)]);
      D[i * T + j] = c + best;
    }
  }
  if (!std::isfinite(D[L * T - 1])) {
    throw std::invalid_argument("dtw: band too narrow to connect the sequence endpoints");
  }
  return table;
}

WarpPath backtrack(const CostTable& table);

template <typename Cost>
  requires std::invocable<Cost&, double, double>
WarpPath dtw_align(std::span<const double> contour, std::span<const double> ticks, Cost&& cost,
                   const DtwOptions& options = {}) {
  return backtrack(dtw_cost_table(contour, ticks, std::forward<Cost>(cost), options));
}

// Absolute MIDI difference cost.
WarpPath dtw_align(std::span<const double> contour, std::span<const double> ticks,
                   const DtwOptions& options = {});

struct TickRange {
  std::size_t start_tick = 0;
  std::size_t end_tick = 0;  // inclusive
};

// Earliest tick paired with `start_frame` to latest tick paired with `end_frame`.
TickRange map_chunk_to_snippet(const WarpPath& path, std::size_t start_frame, std::size_t end_frame);

// Per-frame first/last paired tick, for repeated chunk lookups on one path.
class PathIndex {
 public:
  PathIndex() = default;
  explicit PathIndex(const WarpPath& path);

  std::size_t frames() const { return first_.size(); }
  TickRange lookup(std::size_t start_frame, std::size_t end_frame) const;

 private:
  std::vector<std::size_t> first_;
  std::vector<std::size_t> last_;
};

}  // namespace mpa::align
