#pragma once

// In-memory dataset of synthetic assessment records and its on-disk layout:
//
//   <dir>/manifest                generator parameters, key=value lines
//   <dir>/scores/<score_id>.score
//   <dir>/contours/<id>.contour
//   <dir>/records.txt             id score_id band musicality note_accuracy
//                                 rhythmic_accuracy wrong_note_rate
//                                 intonation_std tempo_jitter onset_noise

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpa/data/generator.hpp"

namespace mpa::data {

struct AssessmentRecord {
  std::string id;
  std::string score_id;
  Band band = Band::middle;
  signal::PitchContour contour;
  Ratings ratings;
  DegradationParams degradation;
};

struct ScoreEntry {
  std::string id;
  signal::Score score;
};

inline constexpr std::size_t kDefaultScoreCount = 6;
inline constexpr double kDefaultLabelNoise = 0.02;

struct GeneratorConfig {
  std::size_t n = 1000;
  Band band = Band::middle;
  std::uint64_t seed = 0;
  std::size_t score_count = kDefaultScoreCount;
  double label_noise = kDefaultLabelNoise;
};

struct Dataset {
  GeneratorConfig config;
  std::vector<ScoreEntry> scores;
  std::vector<AssessmentRecord> records;

  // Index into `scores` for a record's score_id; throws if absent.
  std::size_t score_index(const AssessmentRecord& record) const;
  const signal::Score& score_of(const AssessmentRecord& record) const {
    return scores[score_index(record)].score;
  }
};

Dataset generate_dataset(const GeneratorConfig& config);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Seeded 8:1:1 partition of record indices [0, n).
DatasetSplit split_dataset(std::size_t n, Rng& rng);

}  // namespace mpa::data
