#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpa/rng.hpp"

namespace mpa::signal {

// 44.1 kHz audio analysed with a 256-sample hop.
inline constexpr double kSampleRate = 44100.0;
inline constexpr double kHopSize = 256.0;
inline constexpr double kFrameRate = kSampleRate / kHopSize;

// Unvoiced frames (and score rests) carry pitch 0.
inline constexpr double kUnvoiced = 0.0;
inline constexpr double kMaxWrappedDistance = 6.0;

inline bool is_voiced(double midi) { return midi > kUnvoiced; }

struct PitchContour {
  std::vector<double> frames;
  double frame_rate = kFrameRate;

  std::size_t size() const { return frames.size(); }
  double duration_seconds() const { return static_cast<double>(frames.size()) / frame_rate; }
  // Throws std::invalid_argument when a frame is outside {0} U (0, 127] or
  // the frame rate is not positive.
  void validate() const;
};

struct Note {
  int midi = 0;  // 0 encodes a rest
  int ticks = 1;
};

struct Score {
  std::vector<Note> notes;
  int ticks_per_beat = 4;
  double tempo_bpm = 120.0;

  std::size_t total_ticks() const;
  double seconds_per_tick() const { return 60.0 / (tempo_bpm * ticks_per_beat); }
  void validate() const;
};

// 69 + 12 log2(f / 440); non-positive frequencies map to the unvoiced sentinel.
double hz_to_midi(double hz);

inline double normalize_pitch(double midi) { return midi / 127.0; }

// Frames in a chunk of `seconds`: whole hops that fit, floor(seconds * rate).
std::size_t chunk_frames(double seconds, double frame_rate = kFrameRate);

struct Chunk {
  std::size_t start_frame = 0;
  std::vector<double> frames;
  // True when the contour was shorter than the chunk and got zero-padded.
  bool padded = false;
};

// Contiguous N-frame slice with a uniformly drawn start in [0, L - N].
Chunk chunk_random(const PitchContour& contour, double seconds, Rng& rng);

// Slice starting at `start`, zero-padded if the contour is too short.
Chunk chunk_at(const PitchContour& contour, std::size_t start, std::size_t length);

// Piecewise-constant resampling: out[i] = seq[floor(i * M / N)].
std::vector<double> resample_step(std::span<const double> seq, std::size_t target);

// Octave-independent distance min(m, 12 - m), m = |p - s| mod 12, in [0, 6].
// Unvoiced inputs score the maximum.
double wrapped_distance(double performed, double reference);

// Each note's pitch repeated for its duration in ticks; rests stay unvoiced.
std::vector<double> expand_score_to_ticks(const Score& score);

}  // namespace mpa::signal
