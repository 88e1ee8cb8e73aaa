#include "mpa/signal/pitch.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpa::signal {

void PitchContour::validate() const {
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw std::invalid_argument("contour frame rate must be positive");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double v = frames[i];
    if (!(v == kUnvoiced || (v > 0.0 && v <= 127.0))) {
      throw std::invalid_argument("contour frame " + std::to_string(i) + " has pitch " +
                                  std::to_string(v) + " outside (0, 127]");
    }
  }
}

std::size_t Score::total_ticks() const {
  std::size_t t = 0;
  for (const auto& n : notes) t += static_cast<std::size_t>(n.ticks);
  return t;
}

void Score::validate() const {
  if (notes.empty()) throw std::invalid_argument("score has no notes");
  if (ticks_per_beat < 1) throw std::invalid_argument("ticks_per_beat must be positive");
  if (!(tempo_bpm > 0.0) || !std::isfinite(tempo_bpm)) {
    throw std::invalid_argument("tempo must be positive");
  }
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (notes[i].midi < 0 || notes[i].midi > 127) {
      throw std::invalid_argument("note " + std::to_string(i) + " pitch outside 0..127");
    }
    if (notes[i].ticks < 1) {
      throw std::invalid_argument("note " + std::to_string(i) + " has no duration");
    }
  }
}

double hz_to_midi(double hz) {
  if (!(hz > 0.0)) return kUnvoiced;
  return 69.0 + 12.0 * std::log2(hz / 440.0);
}

std::size_t chunk_frames(double seconds, double frame_rate) {
  if (!(seconds > 0.0) || !(frame_rate > 0.0)) {
    throw std::invalid_argument("chunk length and frame rate must be positive");
  }
  // The epsilon keeps exact multiples (duration * rate) from flooring down.
  return static_cast<std::size_t>(std::floor(seconds * frame_rate + 1e-9));
}

Chunk chunk_at(const PitchContour& contour, std::size_t start, std::size_t length) {
  Chunk chunk;
  chunk.start_frame = start;
  chunk.frames.assign(length, kUnvoiced);
  const std::size_t L = contour.frames.size();
  if (start + length > L) chunk.padded = true;
  for (std::size_t i = 0; i < length && start + i < L; ++i) chunk.frames[i] = contour.frames[start + i];
  return chunk;
}

Chunk chunk_random(const PitchContour& contour, double seconds, Rng& rng) {
  const std::size_t n = chunk_frames(seconds, contour.frame_rate);
  if (n == 0) throw std::invalid_argument("chunk shorter than one frame");
  const std::size_t L = contour.frames.size();
  if (L < n) return chunk_at(contour, 0, n);
  std::uniform_int_distribution<std::size_t> pick(0, L - n);
  return chunk_at(contour, pick(rng), n);
}

std::vector<double> resample_step(std::span<const double> seq, std::size_t target) {
  if (seq.empty()) throw std::invalid_argument("resample_step: empty input");
  const std::size_t m = seq.size();
  std::vector<double> out(target);
  for (std::size_t i = 0; i < target; ++i) out[i] = seq[i * m / target];
  return out;
}

double wrapped_distance(double performed, double reference) {
  if (!is_voiced(performed) || !is_voiced(reference)) return kMaxWrappedDistance;
  const double m = std::fmod(std::fabs(performed - reference), 12.0);
  return std::min(m, 12.0 - m);
}

std::vector<double> expand_score_to_ticks(const Score& score) {
  std::vector<double> ticks;
  ticks.reserve(score.total_ticks());
  for (const auto& n : score.notes) {
    ticks.insert(ticks.end(), static_cast<std::size_t>(n.ticks), static_cast<double>(n.midi));
  }
  return ticks;
}

}  // namespace mpa::signal
