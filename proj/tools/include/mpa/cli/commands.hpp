#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpa/data/dataset.hpp"
#include "mpa/train/experiment.hpp"

namespace mpa::cli {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateOptions {
  data::GeneratorConfig generator;
  std::filesystem::path out;
};

struct TrainOptions {
  std::filesystem::path dataset;
  std::string model = "si_convnet";  // a model kind or "all"
  Criterion criterion = Criterion::note_accuracy;
  std::optional<double> chunk_seconds;
  std::optional<std::size_t> resolution;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out;
  double lr = train::kDefaultLearningRate;
  std::size_t batch_size = train::kDefaultBatchSize;
  std::size_t max_epochs = train::kDefaultMaxEpochs;
  std::size_t patience = train::kDefaultPatience;
  std::size_t pooled_grid = 11;
  std::optional<std::size_t> dtw_band;
  std::size_t workers = 1;
};

struct SweepOptions {
  TrainOptions base;
  train::SweepKind kind = train::SweepKind::chunk_size;
  std::vector<double> values;  // defaults per kind when empty
};

struct AssessOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path contour;
  std::filesystem::path score;
  std::optional<std::string> model;  // rejected if it disagrees with the manifest
  std::optional<std::filesystem::path> dump_path;
};

struct Assessment {
  Criterion criterion;
  models::ModelKind kind;
  double rating;
};

// "0..9", "3", "1,4,7" or a mix like "0..2,8".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Models selected by --model, "all" expanding to every kind.
std::vector<models::ModelKind> resolve_models(std::string_view name);

// Resolved training configuration for one model kind; throws UsageError on
// flag combinations that do not apply to the kind.
train::TrainConfig make_train_config(const TrainOptions& options, models::ModelKind kind, bool fan_out);

void cmd_generate(const GenerateOptions& options, std::ostream& log);
void cmd_train(const TrainOptions& options, std::ostream& log);
void cmd_sweep(const SweepOptions& options, std::ostream& log);
Assessment cmd_assess(const AssessOptions& options);

// FNV-1a over the dataset manifest and record table.
std::string dataset_fingerprint(const std::filesystem::path& dataset_dir);

// Parses argv and dispatches; returns the process exit code. Errors are
// reported on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpa::cli
