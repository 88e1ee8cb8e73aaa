#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpa/train/metrics.hpp"
#include "mpa/train/trainer.hpp"

namespace mpa::train {

struct ExperimentConfig {
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::size_t workers = 1;
  // When set, each seed's best model is saved here.
  std::optional<std::filesystem::path> checkpoint_dir;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double r2 = 0.0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
  double seconds = 0.0;
};

struct ExperimentReport {
  TrainConfig config;
  std::vector<SeedResult> seeds;  // in requested seed order
  Summary summary;
  std::size_t parameter_count = 0;
  double wall_seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;

  std::vector<double> r2_values() const;
};

using SeedCallback = std::function<void(const SeedResult&)>;

ExperimentReport run_experiment(const data::Dataset& dataset, const ExperimentConfig& config,
                                const SeedCallback& on_seed = {});

enum class SweepKind { chunk_size, matrix_resolution };

std::string_view to_string(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view name);
std::vector<double> default_sweep_values(SweepKind kind);

// Applies one sweep value to a config (chunk seconds or matrix resolution).
TrainConfig with_sweep_value(const TrainConfig& base, SweepKind kind, double value);

std::vector<ExperimentReport> sweep(const data::Dataset& dataset, SweepKind kind, std::span<const double> values,
                                    const ExperimentConfig& base, const SeedCallback& on_seed = {});

// The swept quantity of a report: chunk seconds for sequence models, matrix
// resolution for dist_mat.
double setting_value(const TrainConfig& config);
std::string checkpoint_name(const TrainConfig& config, std::uint64_t seed);

// Human-readable report. Contains no timing so reruns compare equal.
void write_report(std::ostream& os, const ExperimentReport& report);
// Tab-separated rows: seed criterion model value r2.
void write_report_rows(std::ostream& os, std::span<const ExperimentReport> reports);
void write_comparison_table(std::ostream& os, std::span<const ExperimentReport> reports);

// MPA_WORKERS, defaulting to 1; must be a positive integer when set.
std::size_t workers_from_env();

}  // namespace mpa::train
