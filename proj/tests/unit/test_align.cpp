#include <gtest/gtest.h>


#include "mpa/align/dtw.hpp"
#include "oracles.hpp"

namespace {

using mpa::Rng;
using mpa::align::dtw_align;
using mpa::align::map_chunk_to_snippet;
using mpa::align::PathIndex;
using mpa::align::WarpPath;
using Path = std::vector<std::pair<std::size_t, std::size_t>>;

std::vector<double> random_pitches(Rng& rng, std::size_t n, bool integral) {
  std::vector<double> v(n);
  std::uniform_int_distribution<int> note(58, 64);
  std::uniform_real_distribution<double> real(58.0, 64.0);
  for (auto& x : v) x = integral ? note(rng) : real(rng);
  return v;
}

TEST(Dtw, IdenticalSequencesGiveDiagonal) {
  const std::vector<double> s{60, 62, 64, 62, 60};
  const auto p = dtw_align(s, s);
  EXPECT_EQ(p.total_cost, 0.0);
  ASSERT_EQ(p.pairs.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(p.pairs[i], std::make_pair(i, i));
}

TEST(Dtw, DoubledContourHasZeroCost) {
  const std::vector<double> score{60, 62, 64};
  const std::vector<double> doubled{60, 60, 62, 62, 64, 64};
  const auto p = dtw_align(doubled, score);
  EXPECT_EQ(p.total_cost, 0.0);
  EXPECT_EQ(p.pairs.size(), doubled.size());
  for (const auto& [i, j] : p.pairs) EXPECT_EQ(j, i / 2);
}

TEST(Dtw, PathIsMonotoneAndConnected) {
  Rng rng(4);
  const auto a = random_pitches(rng, 30, false), b = random_pitches(rng, 17, false);
  const auto p = dtw_align(a, b);
  EXPECT_EQ(p.pairs.front(), std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(p.pairs.back(), std::make_pair(a.size() - 1, b.size() - 1));
  for (std::size_t k = 1; k < p.pairs.size(); ++k) {
    const auto di = p.pairs[k].first - p.pairs[k - 1].first;
    const auto dj = p.pairs[k].second - p.pairs[k - 1].second;
    EXPECT_LE(di, 1u);
    EXPECT_LE(dj, 1u);
    EXPECT_GE(di + dj, 1u);
  }
}

TEST(Dtw, MatchesBruteForceEnumeration) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto L = mpa::testing::random_size(rng, 1, 8), T = mpa::testing::random_size(rng, 1, 8);
    const bool integral = trial % 2 == 0;  // integer pitches make ties common
    const auto a = random_pitches(rng, L, integral), b = random_pitches(rng, T, integral);
    const auto oracle = mpa::testing::brute_force_dtw(a, b);
    const auto p = dtw_align(a, b);
    ASSERT_EQ(p.total_cost, oracle.best) << "trial " << trial;
    ASSERT_EQ(p.pairs, mpa::testing::preferred_path(oracle.optimal)) << "trial " << trial;
  }
}

TEST(Dtw, CustomCostIsUsed) {
  // Squared cost prefers two unit mismatches over one double mismatch.
  const std::vector<double> a{0, 2}, b{1};
  const auto p = dtw_align(a, b, [](double x, double y) { return (x - y) * (x - y); });
  EXPECT_EQ(p.total_cost, 2.0);
}

TEST(Dtw, BandRestrictsPath) {
  Rng rng(5);
  const auto a = random_pitches(rng, 40, false), b = random_pitches(rng, 40, false);
  mpa::align::DtwOptions opt;
  opt.band_radius = 3;
  const auto p = dtw_align(a, b, opt);
  for (const auto& [i, j] : p.pairs) EXPECT_LE(i > j ? i - j : j - i, 3u);
  EXPECT_GE(p.total_cost, dtw_align(a, b).total_cost);
}

TEST(Dtw, RejectsEmptyInput) {
  const std::vector<double> empty, one{60};
  EXPECT_THROW(dtw_align(empty, one), std::invalid_argument);
  EXPECT_THROW(dtw_align(one, empty), std::invalid_argument);
}

WarpPath path_of(Path pairs) {
  WarpPath p;
  p.pairs = std::move(pairs);
  return p;
}

TEST(MapChunk, DiagonalFullRange) {
  Path d;
  for (std::size_t i = 0; i < 6; ++i) d.emplace_back(i, i);
  const auto r = map_chunk_to_snippet(path_of(d), 0, 5);
  EXPECT_EQ(r.start_tick, 0u);
  EXPECT_EQ(r.end_tick, 5u);
}

TEST(MapChunk, SingleFrameSingleTick) {
  const auto r = map_chunk_to_snippet(path_of({{0, 0}, {1, 1}, {2, 2}}), 1, 1);
  EXPECT_EQ(r.start_tick, 1u);
  EXPECT_EQ(r.end_tick, 1u);
}

TEST(MapChunk, HandBuiltPath) {
  // 8x8 path with a horizontal run at frame 2 (ticks 2..4) and a vertical
  // run on tick 6 (frames 5..6):
  // (0,0) (1,1) (2,2) (2,3) (2,4) (3,5) (4,5) (5,6) (6,6) (7,7)
  const Path p{{0, 0}, {1, 1}, {2, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 5}, {5, 6}, {6, 6}, {7, 7}};
  const auto r = map_chunk_to_snippet(path_of(p), 2, 5);
  EXPECT_EQ(r.start_tick, 2u);  // earliest tick paired with frame 2
  EXPECT_EQ(r.end_tick, 6u);    // latest tick paired with frame 5
  const PathIndex index(path_of(p));
  EXPECT_EQ(index.frames(), 8u);
  const auto q = index.lookup(2, 5);
  EXPECT_EQ(q.start_tick, r.start_tick);
  EXPECT_EQ(q.end_tick, r.end_tick);
}

TEST(MapChunk, IndexAgreesWithScanOnRandomPaths) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_pitches(rng, 25, true), b = random_pitches(rng, 19, true);
    const auto p = dtw_align(a, b);
    const PathIndex index(p);
    for (std::size_t s = 0; s < a.size(); s += 3) {
      for (std::size_t e = s; e < a.size(); e += 4) {
        const auto x = map_chunk_to_snippet(p, s, e);
        const auto y = index.lookup(s, e);
        ASSERT_EQ(x.start_tick, y.start_tick);
        ASSERT_EQ(x.end_tick, y.end_tick);
      }
    }
  }
}

}  // namespace
