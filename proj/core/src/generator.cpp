#include "mpa/data/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mpa::data {

namespace {

// Stationary AR(1) correlation time of the intonation jitter, in frames
// (about 46 ms at the analysis rate).
constexpr double kJitterFrames = 8.0;

// Unvoiced gaps: probability per note boundary is this factor times the
// onset noise (in seconds), lengths 1..kMaxGapFrames (up to ~17 ms).
constexpr double kGapsPerSecondOfNoise = 4.0;
constexpr std::size_t kMaxGapFrames = 3;

const BandPreset kMiddle{136, 110, 165, 12.0, 30.0, {0.45, 0.40, 0.15}, 0.2};
const BandPreset kSymphonic{292, 240, 345, 25.0, 50.0, {0.70, 0.25, 0.05}, 0.1};

constexpr int kDurationTicks[3] = {1, 2, 4};
constexpr int kMajorScale[7] = {0, 2, 4, 5, 7, 9, 11};

void check_range(double v, double lo, double hi, const char* name) {
  if (!(v >= lo && v <= hi)) {
    throw std::invalid_argument(std::string("degradation ") + name + " = " + std::to_string(v) +
                                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

bool is_zero(const DegradationParams& d) {
  return d.wrong_note_rate == 0.0 && d.intonation_std == 0.0 && d.tempo_jitter == 0.0 &&
         d.onset_noise == 0.0;
}

std::vector<double> fill_frames(const signal::Score& score, const std::vector<std::size_t>& bounds,
                                const std::vector<int>& pitches) {
  std::vector<double> frames(bounds.back(), signal::kUnvoiced);
  for (std::size_t k = 0; k < score.notes.size(); ++k) {
    std::fill(frames.begin() + static_cast<std::ptrdiff_t>(bounds[k]),
              frames.begin() + static_cast<std::ptrdiff_t>(bounds[k + 1]), static_cast<double>(pitches[k]));
  }
  return frames;
}

}  // namespace

std::string_view to_string(Band band) {
  return band == Band::middle ? "middle" : "symphonic";
}

Band parse_band(std::string_view name) {
  if (name == "middle") return Band::middle;
  if (name == "symphonic") return Band::symphonic;
  throw std::invalid_argument("unknown band '" + std::string(name) + "' (expected middle or symphonic)");
}

const BandPreset& preset(Band band) { return band == Band::middle ? kMiddle : kSymphonic; }

void DegradationParams::validate() const {
  check_range(wrong_note_rate, 0.0, 1.0, "wrong_note_rate");
  check_range(intonation_std, 0.0, 3.0, "intonation_std");
  check_range(tempo_jitter, 0.0, 0.5, "tempo_jitter");
  check_range(onset_noise, 0.0, 0.5, "onset_noise");
}

double Ratings::get(Criterion c) const {
  switch (c) {
    case Criterion::musicality: return musicality;
    case Criterion::note_accuracy: return note_accuracy;
    case Criterion::rhythmic_accuracy: return rhythmic_accuracy;
  }
  return 0.0;
}

signal::Score generate_score(Rng& rng, Band band) {
  const auto& p = preset(band);
  std::normal_distribution<double> count_dist(p.mean_notes, p.note_spread);
  const int count = std::clamp(static_cast<int>(std::lround(count_dist(rng))), p.min_notes, p.max_notes);

  const int tonic = std::uniform_int_distribution<int>(0, 11)(rng);
  std::vector<int> scale;
  for (int m = kLowestPitch; m <= kHighestPitch; ++m) {
    const int degree = ((m - tonic) % 12 + 12) % 12;
    if (std::find(std::begin(kMajorScale), std::end(kMajorScale), degree) != std::end(kMajorScale)) {
      scale.push_back(m);
    }
  }
  const int top = static_cast<int>(scale.size()) - 1;
  // Stepwise motion dominates, with occasional thirds and fourths.
  std::discrete_distribution<int> step_dist({0.05, 0.15, 0.25, 0.10, 0.25, 0.15, 0.05});
  std::discrete_distribution<int> dur_dist(std::begin(p.duration_weights), std::end(p.duration_weights));

  signal::Score score;
  score.ticks_per_beat = kTicksPerBeat;
  int pos = std::uniform_int_distribution<int>(top / 4, 3 * top / 4)(rng);
  for (int i = 0; i < count; ++i) {
    score.notes.push_back({scale[static_cast<std::size_t>(pos)], kDurationTicks[dur_dist(rng)]});
    int next = pos + step_dist(rng) - 3;
    if (next < 0) next = -next;
    if (next > top) next = 2 * top - next;
    pos = std::clamp(next, 0, top);
  }

  // Tempo is chosen so the rendition lasts about the band's typical length.
  const double beats = static_cast<double>(score.total_ticks()) / kTicksPerBeat;
  const double seconds = p.target_seconds * std::uniform_real_distribution<double>(0.9, 1.1)(rng);
  score.tempo_bpm = std::clamp(beats * 60.0 / seconds, kMinTempo, kMaxTempo);
  return score;
}

signal::PitchContour render_exact(const signal::Score& score) {
  score.validate();
  const double spt = score.seconds_per_tick();
  std::vector<std::size_t> bounds{0};
  std::size_t tick = 0;
  for (const auto& n : score.notes) {
    tick += static_cast<std::size_t>(n.ticks);
    const auto f = static_cast<std::size_t>(std::llround(static_cast<double>(tick) * spt * signal::kFrameRate));
    bounds.push_back(std::max(f, bounds.back() + 1));
  }
  std::vector<int> pitches;
  for (const auto& n : score.notes) pitches.push_back(n.midi);
  return {fill_frames(score, bounds, pitches), signal::kFrameRate};
}

signal::PitchContour render_performance(const signal::Score& score, const DegradationParams& d, Rng& rng) {
  d.validate();
  if (is_zero(d)) return render_exact(score);
  score.validate();
  const std::size_t n = score.notes.size();
  const double spt = score.seconds_per_tick();
  const double fps = signal::kFrameRate;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Per-note durations with tempo jitter.
  std::vector<double> seconds(n);
  for (std::size_t k = 0; k < n; ++k) {
    double mult = 1.0;
    if (d.tempo_jitter > 0.0) mult += d.tempo_jitter * unit(rng);
    seconds[k] = score.notes[k].ticks * spt * mult;
  }
  std::vector<double> onsets(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) onsets[k + 1] = onsets[k] + seconds[k];

  // Onset noise moves each interior boundary, never past a neighbour's midpoint.
  std::vector<double> shifts(n, 0.0);
  if (d.onset_noise > 0.0) {
    std::normal_distribution<double> jitter(0.0, d.onset_noise);
    for (std::size_t k = 1; k < n; ++k) {
      const double limit = 0.45 * std::min(seconds[k - 1], seconds[k]);
      shifts[k] = std::clamp(jitter(rng), -limit, limit);
    }
    for (std::size_t k = 1; k < n; ++k) onsets[k] += shifts[k];
  }

  std::vector<std::size_t> bounds(n + 1, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto f = static_cast<std::size_t>(std::llround(onsets[k] * fps));
    bounds[k] = std::max(f, bounds[k - 1] + 1);
  }

  std::vector<int> pitches;
  for (const auto& note : score.notes) pitches.push_back(note.midi);
  if (d.wrong_note_rate > 0.0) {
    std::vector<std::size_t> voiced;
    for (std::size_t k = 0; k < n; ++k) {
      if (pitches[k] > 0) voiced.push_back(k);
    }
    std::shuffle(voiced.begin(), voiced.end(), rng);
    const auto wrong = static_cast<std::size_t>(std::llround(d.wrong_note_rate * static_cast<double>(voiced.size())));
    std::uniform_int_distribution<int> size_dist(1, 3);
    std::bernoulli_distribution up(0.5);
    for (std::size_t i = 0; i < wrong; ++i) {
      const std::size_t k = voiced[i];
      const int delta = size_dist(rng);
      int shifted = pitches[k] + (up(rng) ? delta : -delta);
      if (shifted < 1 || shifted > 127) shifted = pitches[k] + (pitches[k] + delta <= 127 ? delta : -delta);
      pitches[k] = shifted;
    }
  }

  auto frames = fill_frames(score, bounds, pitches);

  if (d.onset_noise > 0.0) {
    // Sloppy articulation: a brief silence before some notes, more often the
    // noisier the timing.
    std::bernoulli_distribution gapped(std::min(1.0, kGapsPerSecondOfNoise * d.onset_noise));
    std::uniform_int_distribution<std::size_t> gap_len(1, kMaxGapFrames);
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t len = bounds[k + 1] - bounds[k];
      if (!gapped(rng)) continue;
      const auto gap = std::min(gap_len(rng), len / 3);
      std::fill_n(frames.begin() + static_cast<std::ptrdiff_t>(bounds[k]), gap, signal::kUnvoiced);
    }
  }

  if (d.intonation_std > 0.0) {
    const double a = std::exp(-1.0 / kJitterFrames);
    const double innovation = std::sqrt(1.0 - a * a) * d.intonation_std;
    std::normal_distribution<double> normal(0.0, 1.0);
    double state = d.intonation_std * normal(rng);
    for (auto& f : frames) {
      if (signal::is_voiced(f)) f = std::clamp(f + state, 1e-3, 127.0);
      state = a * state + innovation * normal(rng);
    }
  }
  return {std::move(frames), fps};
}

Ratings ground_truth_ratings(const DegradationParams& d) {
  d.validate();
  Ratings r;
  r.note_accuracy = std::exp(-(4.0 * d.wrong_note_rate + 1.5 * d.intonation_std));
  r.rhythmic_accuracy = std::exp(-(3.0 * d.tempo_jitter + 8.0 * d.onset_noise));
  r.musicality = 0.4 * r.note_accuracy + 0.4 * r.rhythmic_accuracy + 0.2 * std::exp(-2.0 * d.intonation_std);
  return r;
}

Ratings add_label_noise(const Ratings& r, double sigma, Rng& rng) {
  if (sigma <= 0.0) return r;
  std::normal_distribution<double> noise(0.0, sigma);
  Ratings out;
  out.musicality = std::clamp(r.musicality + noise(rng), 0.0, 1.0);
  out.note_accuracy = std::clamp(r.note_accuracy + noise(rng), 0.0, 1.0);
  out.rhythmic_accuracy = std::clamp(r.rhythmic_accuracy + noise(rng), 0.0, 1.0);
  return out;
}

DegradationParams sample_degradation(Band band, Rng& rng) {
  const double lo = preset(band).min_rating;
  std::uniform_real_distribution<double> rating(lo, 1.0);
  std::uniform_real_distribution<double> share(0.0, 1.0);
  DegradationParams d;
  // Draw the target rating first, then split its exponent between the two
  // contributing degradations.
  const double note_budget = -std::log(rating(rng));
  const double wrong_share = share(rng);
  d.wrong_note_rate = wrong_share * note_budget / 4.0;
  d.intonation_std = (1.0 - wrong_share) * note_budget / 1.5;

  const double rhythm_budget = -std::log(rating(rng));
  const double tempo_share = share(rng);
  d.tempo_jitter = std::min(0.5, tempo_share * rhythm_budget / 3.0);
  d.onset_noise = (rhythm_budget - 3.0 * d.tempo_jitter) / 8.0;
  return d;
}

}  // namespace mpa::data
