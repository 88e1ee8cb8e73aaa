#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "mpa/data/generator.hpp"
#include "mpa/signal/distance_matrix.hpp"
#include "mpa/signal/pitch.hpp"
#include "mpa/signal/text_formats.hpp"

namespace {

using namespace mpa::signal;
using mpa::Rng;

PitchContour contour_of(std::vector<double> frames) {
  PitchContour c;
  c.frames = std::move(frames);
  return c;
}

TEST(HzToMidi, Formula) {
  EXPECT_EQ(hz_to_midi(440.0), 69.0);
  EXPECT_EQ(hz_to_midi(880.0), 81.0);
  EXPECT_NEAR(hz_to_midi(261.63), 60.0, 0.01);
  EXPECT_EQ(hz_to_midi(0.0), kUnvoiced);
  EXPECT_EQ(hz_to_midi(-5.0), kUnvoiced);
}

TEST(HzToMidi, OctaveLaw) {
  // Exact on the octaves of A4; elsewhere log2 rounding leaves an ulp or two.
  for (int k = -4; k <= 4; ++k) EXPECT_EQ(hz_to_midi(std::ldexp(440.0, k)), 69.0 + 12.0 * k);
  Rng rng(4);
  std::uniform_real_distribution<double> f(30.0, 2000.0);
  for (int i = 0; i < 1000; ++i) {
    const double hz = f(rng);
    EXPECT_NEAR(hz_to_midi(2.0 * hz), hz_to_midi(hz) + 12.0, 1e-12) << hz;
  }
}

TEST(NormalizePitch, Linear) {
  EXPECT_EQ(normalize_pitch(0.0), 0.0);
  EXPECT_EQ(normalize_pitch(127.0), 1.0);
  EXPECT_EQ(normalize_pitch(63.5), 0.5);
}

TEST(ChunkFrames, HopArithmetic) {
  EXPECT_EQ(chunk_frames(10.0), 1722u);
  EXPECT_EQ(chunk_frames(5.0), 861u);
  EXPECT_THROW(chunk_frames(0.0), std::invalid_argument);
}

TEST(ChunkRandom, FullDurationReturnsWholeContour) {
  auto c = contour_of(std::vector<double>(861, 60.0));
  Rng rng(1);
  const auto chunk = chunk_random(c, 5.0, rng);
  EXPECT_EQ(chunk.start_frame, 0u);
  EXPECT_EQ(chunk.frames, c.frames);
  EXPECT_FALSE(chunk.padded);
}

TEST(ChunkRandom, StartsAreUniform) {
  // 10^4 draws over 1723 start positions grouped into 10 bins; chi-square
  // with 9 degrees of freedom stays below 27.9 with probability 0.999.
  std::vector<double> frames(3444);
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = 50.0 + static_cast<double>(i % 40);
  const auto c = contour_of(frames);
  Rng rng(77);
  std::vector<double> bins(10, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const auto chunk = chunk_random(c, 10.0, rng);
    ASSERT_LE(chunk.start_frame, 1722u);
    ASSERT_EQ(chunk.frames.size(), 1722u);
    ASSERT_EQ(chunk.frames.front(), frames[chunk.start_frame]);
    bins[chunk.start_frame * 10 / 1723] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < 10; ++b) {
    const auto lo = (b * 1723 + 9) / 10;
    const auto hi = ((b + 1) * 1723 + 9) / 10;
    const double expected = 10000.0 * static_cast<double>(hi - lo) / 1723.0;
    chi2 += (bins[b] - expected) * (bins[b] - expected) / expected;
  }
  EXPECT_LT(chi2, 27.9);
}

TEST(ChunkAt, ZeroPadsShortContours) {
  const auto chunk = chunk_at(contour_of({60, 61, 62}), 1, 4);
  EXPECT_EQ(chunk.frames, (std::vector<double>{61, 62, 0, 0}));
  EXPECT_TRUE(chunk.padded);
}

TEST(ResampleStep, SpecExamples) {
  const std::vector<double> two{60, 62}, three{60, 62, 64};
  EXPECT_EQ(resample_step(three, 3), three);
  EXPECT_EQ(resample_step(two, 4), (std::vector<double>{60, 60, 62, 62}));
  // floor(i * 3 / 2) picks indices 0 and 1.
  EXPECT_EQ(resample_step(three, 2), (std::vector<double>{60, 62}));
}

TEST(WrappedDistance, SpecExamples) {
  EXPECT_EQ(wrapped_distance(60, 72), 0.0);
  EXPECT_EQ(wrapped_distance(60, 66), 6.0);
  EXPECT_EQ(wrapped_distance(62.5, 60), 2.5);
  EXPECT_EQ(wrapped_distance(0, 60), kMaxWrappedDistance);
  EXPECT_EQ(wrapped_distance(60, 0), kMaxWrappedDistance);
}

TEST(WrappedDistance, OctaveInvarianceAndBound) {
  Rng rng(8);
  std::uniform_real_distribution<double> pitch(1.0, 100.0);
  std::uniform_int_distribution<int> octave(-2, 2);
  for (int i = 0; i < 10000; ++i) {
    const double p = pitch(rng), s = pitch(rng);
    const double d = wrapped_distance(p, s);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 6.0);
    const double shifted = p + 12.0 * octave(rng);
    if (shifted > 0.0) {
      ASSERT_NEAR(wrapped_distance(shifted, s), d, 1e-12);
    }
  }
}

TEST(ExpandScore, Concatenation) {
  Score one;
  one.notes = {{60, 4}};
  EXPECT_EQ(expand_score_to_ticks(one), (std::vector<double>{60, 60, 60, 60}));
  Score two;
  two.notes = {{60, 2}, {0, 1}, {62, 1}};
  EXPECT_EQ(expand_score_to_ticks(two), (std::vector<double>{60, 60, 0, 62}));
}

TEST(AreaWeights, BinsSumToOne) {
  for (std::size_t in : {3u, 7u, 10u, 600u}) {
    for (std::size_t out : {1u, 2u, 4u, 9u, 600u}) {
      const auto w = area_weights(in, out);
      ASSERT_EQ(w.bins.size(), out);
      for (const auto& bin : w.bins) {
        double s = 0.0;
        for (const auto& tap : bin) s += tap.weight;
        EXPECT_NEAR(s, 1.0, 1e-12) << in << " -> " << out;
      }
    }
  }
}

TEST(DistanceMatrix, SpecExamples) {
  // Identical sequences at native size: zero diagonal.
  const std::vector<double> seq{60, 62, 64, 65};
  const auto id = build_distance_matrix(seq, seq, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(id.at(i, i), 0.0);

  // Octave-shifted constants: all zero.
  const std::vector<double> high(8, 72.0), low(6, 60.0);
  for (double v : build_distance_matrix(high, low, 5).cells) EXPECT_EQ(v, 0.0);

  // 4x4 raw distances averaged over 2x2 blocks. Contour 60,60,63,63 against
  // ticks 60,61,66,66 gives rows {0,1,6,6},{0,1,6,6},{3,2,3,3},{3,2,3,3}.
  const std::vector<double> contour{60, 60, 63, 63}, ticks{60, 61, 66, 66};
  const auto m = build_distance_matrix(contour, ticks, 2);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.5 / 6.0);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 6.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 2.5 / 6.0);
  EXPECT_DOUBLE_EQ(m.at(1, 1), 3.0 / 6.0);
}

TEST(DistanceMatrix, PerfectRenderingHasZeroDiagonalPath) {
  // With a tempo of exactly 20 frames per tick and one matrix row per tick,
  // every matrix cell covers whole frames of a single note, so a perfect
  // rendering leaves exact zeros along a monotone near-diagonal path.
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
    score.tempo_bpm = 60.0 * kFrameRate / (20.0 * score.ticks_per_beat);
    const auto contour = mpa::data::render_exact(score);
    const std::size_t s = score.total_ticks();
    ASSERT_EQ(contour.size(), 20 * s);
    const auto m = build_distance_matrix(contour, score, s);
    std::size_t prev = 0;
    for (std::size_t i = 0; i < s; ++i) {
      bool found = false;
      for (std::size_t j = std::max(prev, i >= 2 ? i - 2 : 0); j <= std::min(s - 1, i + 2); ++j) {
        if (m.at(i, j) == 0.0) {
          prev = j;
          found = true;
          break;
        }
      }
      ASSERT_TRUE(found) << "trial " << trial << " row " << i;
    }
  }
}

TEST(DistanceMatrix, CellsInUnitRange) {
  Rng rng(3);
  const auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
  const auto perf = mpa::data::render_performance(score, {0.3, 0.5, 0.2, 0.1}, rng);
  const auto m = build_distance_matrix(perf, score, 64);
  for (double v : m.cells) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(TextFormats, ContourRoundTrip) {
  Rng rng(6);
  std::uniform_real_distribution<double> p(40.0, 90.0);
  PitchContour c;
  for (int i = 0; i < 100; ++i) c.frames.push_back(i % 7 == 0 ? 0.0 : p(rng));
  std::stringstream ss;
  write_contour(ss, c);
  const auto back = read_contour(ss);
  EXPECT_EQ(back.frames, c.frames);
  EXPECT_EQ(back.frame_rate, c.frame_rate);
}

TEST(TextFormats, ScoreRoundTripThroughFile) {
  Rng rng(6);
  const auto score = mpa::data::generate_score(rng, mpa::data::Band::symphonic);
  const auto file = std::filesystem::temp_directory_path() / "mpa_test_score.score";
  save_score(file, score);
  const auto back = load_score(file);
  std::filesystem::remove(file);
  EXPECT_EQ(back.tempo_bpm, score.tempo_bpm);
  EXPECT_EQ(back.ticks_per_beat, score.ticks_per_beat);
  ASSERT_EQ(back.notes.size(), score.notes.size());
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    EXPECT_EQ(back.notes[i].midi, score.notes[i].midi);
    EXPECT_EQ(back.notes[i].ticks, score.notes[i].ticks);
  }
}

TEST(TextFormats, RejectsMalformedInput) {
  std::stringstream bad_header("rate=3\n60\n");
  EXPECT_THROW(read_contour(bad_header), FormatError);
  std::stringstream bad_value("frame_rate=172.265625\n60\nabc\n");
  EXPECT_THROW(read_contour(bad_value), FormatError);
  std::stringstream out_of_range("frame_rate=172.265625\n200\n");
  EXPECT_THROW(read_contour(out_of_range), std::exception);
  std::stringstream bad_score("ticks_per_beat=4 tempo_bpm=120\n60\n");
  EXPECT_THROW(read_score(bad_score), FormatError);
  EXPECT_THROW(load_contour("/nonexistent/file.contour"), std::exception);
}

TEST(TextFormats, FormatRealIsShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(60.0), "60");
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(parse_real(format_real(v), "test"), v);
  }
}

}  // namespace
