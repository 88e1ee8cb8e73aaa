#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpa/signal/pitch.hpp"

namespace mpa::signal {


struct DistanceMatrix {
  std::size_t resolution = 0;
  // Row-major; rows follow contour time, columns follow score ticks.
  std::vector<double> cells;

  double at(std::size_t row, std::size_t col) const { return cells[row * resolution + col]; }
};

// Box-filter weights mapping `input` samples onto `output` equal-width bins.
// Bin r covers [r*input/output, (r+1)*input/output); each sample's weight is
// its overlap with the bin divided by the bin width, so every bin's weights
// sum to one. Works for both down- and upsampling.
struct AreaWeights {
  struct Tap {
    std::size_t index;
    double weight;
  };
  std::vector<std::vector<Tap>> bins;
};

AreaWeights area_weights(std::size_t input, std::size_t output);

// Wrapped distances between every contour frame and every expanded score
// tick, area-resampled to resolution x resolution and divided by 6.
DistanceMatrix build_distance_matrix(std::span<const double> contour,
                                     std::span<const double> score_ticks, std::size_t resolution);

DistanceMatrix build_distance_matrix(const PitchContour& contour, const Score& score,
                                     std::size_t resolution);

}  // namespace mpa::signal
