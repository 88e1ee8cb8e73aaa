#include "mpa/train/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mpa/signal/text_formats.hpp"

namespace mpa::train {

using signal::format_real;

std::vector<double> ExperimentReport::r2_values() const {
  std::vector<double> v;
  for (const auto& s : seeds) v.push_back(s.r2);
  return v;
}

double setting_value(const TrainConfig& config) {
  return models::is_chunked(config.spec.kind) ? config.spec.chunk_seconds
                                              : static_cast<double>(config.spec.matrix_resolution);
}

std::string checkpoint_name(const TrainConfig& config, std::uint64_t seed) {
  return std::string(models::to_string(config.spec.kind)) + "_" + std::string(to_string(config.spec.criterion)) +
         "_" + format_real(setting_value(config)) + "_seed" + std::to_string(seed) + ".ckpt";
}

ExperimentReport run_experiment(const data::Dataset& dataset, const ExperimentConfig& config,
                                const SeedCallback& on_seed) {
  config.train.validate();
  if (config.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (config.checkpoint_dir) std::filesystem::create_directories(*config.checkpoint_dir);
  const auto split = default_split(dataset);
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = config.train;
  report.seeds.resize(config.seeds.size());
  report.train_size = split.train.size();
  report.validation_size = split.validation.size();
  report.test_size = split.test.size();
  report.parameter_count = models::build_model<Scalar>(config.train.spec)->parameter_count();

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        TrainConfig cfg = config.train;
        cfg.spec.seed = config.seeds[k];
        auto trained = train(dataset, split, cfg);
        const auto ev = evaluate(*trained.model, dataset, split.test, cfg);
        if (config.checkpoint_dir) {
          models::save_model(*trained.model, *config.checkpoint_dir / checkpoint_name(cfg, cfg.spec.seed));
        }
        SeedResult r;
        r.seed = cfg.spec.seed;
        r.r2 = ev.r2;
        r.epochs = trained.history.epochs.size();
        r.best_epoch = trained.history.best_epoch;
        r.best_validation_loss = trained.history.best_validation_loss;
        r.initial_train_mse = trained.history.initial_train_mse;
        r.final_train_mse = trained.history.final_train_mse;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(mu);
        report.seeds[k] = r;
        if (on_seed) on_seed(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = config.seeds.size();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, config.seeds.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  report.summary = summarize(report.r2_values());
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string_view to_string(SweepKind kind) {
  return kind == SweepKind::chunk_size ? "chunk" : "resolution";
}

SweepKind parse_sweep_kind(std::string_view name) {
  if (name == "chunk") return SweepKind::chunk_size;
  if (name == "resolution") return SweepKind::matrix_resolution;
  throw std::invalid_argument("unknown sweep kind '" + std::string(name) + "' (expected chunk or resolution)");
}

std::vector<double> default_sweep_values(SweepKind kind) {
  if (kind == SweepKind::chunk_size) return {5.0, 10.0};
  return {400.0, 600.0, 900.0};
}

TrainConfig with_sweep_value(const TrainConfig& base, SweepKind kind, double value) {
  TrainConfig cfg = base;
  if (kind == SweepKind::chunk_size) {
    if (!models::is_chunked(cfg.spec.kind)) throw std::invalid_argument("chunk sweep needs a chunked model");
    cfg.spec.chunk_seconds = value;
  } else {
    if (cfg.spec.kind != models::ModelKind::dist_mat) {
      throw std::invalid_argument("resolution sweep needs the dist_mat model");
    }
    if (!(value > 0.0) || std::floor(value) != value) {
      throw std::invalid_argument("matrix resolution must be a positive integer");
    }
    cfg.spec.matrix_resolution = static_cast<std::size_t>(value);
  }
  return cfg;
}

std::vector<ExperimentReport> sweep(const data::Dataset& dataset, SweepKind kind, std::span<const double> values,
                                    const ExperimentConfig& base, const SeedCallback& on_seed) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<ExperimentReport> out;
  for (double v : values) {
    ExperimentConfig cfg = base;
    cfg.train = with_sweep_value(base.train, kind, v);
    out.push_back(run_experiment(dataset, cfg, on_seed));
  }
  return out;
}

void write_report(std::ostream& os, const ExperimentReport& r) {
  const auto& c = r.config;
  const auto& s = c.spec;
  os << "model            " << models::to_string(s.kind) << '\n'
     << "criterion        " << to_string(s.criterion) << '\n';
  if (models::is_chunked(s.kind)) {
    os << "chunk_seconds    " << format_real(s.chunk_seconds) << " (" << models::chunk_length(s) << " frames)\n";
  } else {
    os << "resolution       " << s.matrix_resolution << '\n' << "pooled_grid      " << s.pooled_grid << '\n';
  }
  os << "parameters       " << r.parameter_count;
  const auto ref = models::kReferenceParameterCount[static_cast<std::size_t>(s.kind)];
  if (ref != 0) os << " (reference " << ref << ')';
  os << '\n'
     << "lr               " << format_real(c.lr) << '\n'
     << "batch_size       " << c.batch_size << '\n'
     << "max_epochs       " << c.max_epochs << '\n'
     << "patience         " << c.patience << '\n'
     << "dtw_band         " << (c.dtw_band ? std::to_string(*c.dtw_band) : std::string("none")) << '\n'
     << "split            " << r.train_size << '/' << r.validation_size << '/' << r.test_size << '\n'
     << "validation       start-0 chunk per record\n"
     << "test aggregation chunk grid, stride N/2, mean of chunk predictions\n"
     << "\nseed\tr2\tepochs\tbest_epoch\tbest_val_mse\tinit_train_mse\tfinal_train_mse\n";
  for (const auto& e : r.seeds) {
    os << e.seed << '\t' << format_real(e.r2) << '\t' << e.epochs << '\t' << e.best_epoch << '\t'
       << format_real(e.best_validation_loss) << '\t' << format_real(e.initial_train_mse) << '\t'
       << format_real(e.final_train_mse) << '\n';
  }
  const auto& m = r.summary;
  os << "\nr2 min " << format_real(m.min) << "  q1 " << format_real(m.q1) << "  median " << format_real(m.median)
     << "  q3 " << format_real(m.q3) << "  max " << format_real(m.max) << '\n';
}

void write_report_rows(std::ostream& os, std::span<const ExperimentReport> reports) {
  os << "seed\tcriterion\tmodel\tvalue\tr2\n";
  for (const auto& r : reports) {
    for (const auto& e : r.seeds) {
      os << e.seed << '\t' << to_string(r.config.spec.criterion) << '\t' << models::to_string(r.config.spec.kind)
         << '\t' << format_real(setting_value(r.config)) << '\t' << format_real(e.r2) << '\n';
    }
  }
}

void write_comparison_table(std::ostream& os, std::span<const ExperimentReport> reports) {
  os << "model\tcriterion\tvalue\tseeds\tmedian\tq1\tq3\tmin\tmax\n";
  for (const auto& r : reports) {
    const auto& m = r.summary;
    os << models::to_string(r.config.spec.kind) << '\t' << to_string(r.config.spec.criterion) << '\t'
       << format_real(setting_value(r.config)) << '\t' << r.seeds.size() << '\t' << format_real(m.median) << '\t'
       << format_real(m.q1) << '\t' << format_real(m.q3) << '\t' << format_real(m.min) << '\t'
       << format_real(m.max) << '\n';
  }
}

std::size_t workers_from_env() {
  const char* v = std::getenv("MPA_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw std::invalid_argument("MPA_WORKERS must be a positive integer");
  return static_cast<std::size_t>(n);
}

}  // namespace mpa::train
