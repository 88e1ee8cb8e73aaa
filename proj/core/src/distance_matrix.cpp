#include "mpa/signal/distance_matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mpa::signal {

AreaWeights area_weights(std::size_t input, std::size_t output) {
  if (input == 0 || output == 0) throw std::invalid_argument("area_weights: empty axis");
  // Work in units of 1/(input*output): sample i spans [i*output, (i+1)*output),
  // bin r spans [r*input, (r+1)*input). Overlaps are exact integers.
  AreaWeights w;
  w.bins.resize(output);
  const double width = static_cast<double>(input);
  for (std::size_t r = 0; r < output; ++r) {
    const std::size_t lo = r * input;
    const std::size_t hi = (r + 1) * input;
    const std::size_t first = lo / output;
    const std::size_t last = std::min(input - 1, (hi - 1) / output);
    for (std::size_t i = first; i <= last; ++i) {
      const std::size_t a = std::max(lo, i * output);
      const std::size_t b = std::min(hi, (i + 1) * output);
      if (b > a) w.bins[r].push_back({i, static_cast<double>(b - a) / width});
    }
  }
  return w;
}

DistanceMatrix build_distance_matrix(std::span<const double> contour,
                                     std::span<const double> score_ticks, std::size_t resolution) {
  if (contour.empty()) throw std::invalid_argument("distance matrix: empty contour");
  if (score_ticks.empty()) throw std::invalid_argument("distance matrix: empty score");
  if (resolution == 0) throw std::invalid_argument("distance matrix resolution must be positive");
  const std::size_t T = score_ticks.size();
  const std::size_t S = resolution;
  const auto rows = area_weights(contour.size(), S);
  const auto cols = area_weights(T, S);

  DistanceMatrix m;
  m.resolution = S;
  m.cells.assign(S * S, 0.0);
  std::vector<double> row_avg(T);
  std::vector<double> raw(T);
  for (std::size_t r = 0; r < S; ++r) {
    std::fill(row_avg.begin(), row_avg.end(), 0.0);
    for (const auto& tap : rows.bins[r]) {
      const double p = contour[tap.index];
      for (std::size_t j = 0; j < T; ++j) raw[j] = wrapped_distance(p, score_ticks[j]);
      for (std::size_t j = 0; j < T; ++j) row_avg[j] += tap.weight * raw[j];
    }
    double* out = m.cells.data() + r * S;
    for (std::size_t c = 0; c < S; ++c) {
      double v = 0.0;
      for (const auto& tap : cols.bins[c]) v += tap.weight * row_avg[tap.index];
      out[c] = std::clamp(v / kMaxWrappedDistance, 0.0, 1.0);
    }
  }
  return m;
}

DistanceMatrix build_distance_matrix(const PitchContour& contour, const Score& score,
                                     std::size_t resolution) {
  const auto ticks = expand_score_to_ticks(score);
  return build_distance_matrix(contour.frames, ticks, resolution);
}

}  // namespace mpa::signal
