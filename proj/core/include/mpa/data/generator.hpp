#pragma once

// Synthetic performances with analytically known ratings.
//
// A score is rendered to a pitch contour at the analysis frame rate and then
// degraded along four independent axes. Ratings are closed-form functions of
// the degradation parameters, so a model's error against them is measurable
// without human annotation.

#include <string_view>

#include "mpa/criterion.hpp"
#include "mpa/rng.hpp"
#include "mpa/signal/pitch.hpp"

namespace mpa::data {

enum class Band { middle, symphonic };

std::string_view to_string(Band band);
Band parse_band(std::string_view name);

struct DegradationParams {
  double wrong_note_rate = 0.0;  // fraction of notes shifted by +-1..3 semitones, [0, 1]
  double intonation_std = 0.0;   // smoothed per-frame jitter, semitones, [0, 3]
  double tempo_jitter = 0.0;     // per-note duration multiplier spread, [0, 0.5]
  double onset_noise = 0.0;      // per-onset timing noise, seconds, [0, 0.5]

  void validate() const;
};

struct Ratings {
  double musicality = 1.0;
  double note_accuracy = 1.0;
  double rhythmic_accuracy = 1.0;

  double get(Criterion c) const;
};

struct BandPreset {
  int mean_notes;
  int min_notes;
  int max_notes;
  double note_spread;
  double target_seconds;
  // Probabilities of sixteenth, eighth and quarter notes.
  double duration_weights[3];
  // Lowest rating the degradation sampler aims for.
  double min_rating;
};

const BandPreset& preset(Band band);

inline constexpr int kTicksPerBeat = 4;
inline constexpr int kLowestPitch = 50;
inline constexpr int kHighestPitch = 90;
inline constexpr double kMinTempo = 80.0;
inline constexpr double kMaxTempo = 140.0;

// Random diatonic melody sized for the band.
signal::Score generate_score(Rng& rng, Band band);

// Frame-rounded step rendering of the score at its own tempo.
signal::PitchContour render_exact(const signal::Score& score);

// Exact rendering perturbed by `d`. With d all zero the result equals
// render_exact(score) and rng is not consumed.
signal::PitchContour render_performance(const signal::Score& score, const DegradationParams& d, Rng& rng);

// note_accuracy    = exp(-(4 w + 1.5 s))
// rhythmic_accuracy = exp(-(3 j + 8 o))
// musicality       = 0.4 note + 0.4 rhythm + 0.2 exp(-2 s)
Ratings ground_truth_ratings(const DegradationParams& d);

// Adds N(0, sigma) label noise to every criterion and clamps to [0, 1].
Ratings add_label_noise(const Ratings& r, double sigma, Rng& rng);

// Draws degradations whose note and rhythm ratings are roughly uniform on
// [preset.min_rating, 1].
DegradationParams sample_degradation(Band band, Rng& rng);

}  // namespace mpa::data
