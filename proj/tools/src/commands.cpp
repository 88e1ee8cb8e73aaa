#include "mpa/cli/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mpa/signal/text_formats.hpp"

namespace mpa::cli {

namespace fs = std::filesystem;
using signal::format_real;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  return os;
}

void write_config(std::ostream& os, const train::TrainConfig& c) {
  os << "model=" << models::to_string(c.spec.kind) << '\n'
     << "criterion=" << to_string(c.spec.criterion) << '\n';
  if (models::is_chunked(c.spec.kind)) {
    os << "chunk_seconds=" << format_real(c.spec.chunk_seconds) << '\n';
  } else {
    os << "resolution=" << c.spec.matrix_resolution << '\n' << "pooled_grid=" << c.spec.pooled_grid << '\n';
  }
  os << "lr=" << format_real(c.lr) << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "max_epochs=" << c.max_epochs << '\n'
     << "patience=" << c.patience << '\n'
     << "dtw_band=" << (c.dtw_band ? std::to_string(*c.dtw_band) : std::string("none")) << '\n';
}

std::string seed_string(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

struct RunManifest {
  std::string subcommand;
  std::string started;
  std::vector<std::string> lines;  // resolved configuration
};

void write_manifest(const fs::path& dir, const RunManifest& m, double wall_seconds) {
  auto os = open_out(dir / "manifest");
  os << "subcommand=" << m.subcommand << '\n' << "toolkit_version=" << kToolkitVersion << '\n';
  for (const auto& l : m.lines) os << l << '\n';
  os << "started_utc=" << m.started << '\n'
     << "finished_utc=" << utc_timestamp() << '\n'
     << "wall_seconds=" << std::fixed << std::setprecision(3) << wall_seconds << '\n';
}

std::vector<std::string> config_lines(const train::TrainConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  std::vector<std::string> out;
  std::istringstream is(os.str());
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

train::ExperimentConfig experiment_config(const TrainOptions& o, const train::TrainConfig& t, const fs::path& dir) {
  train::ExperimentConfig e;
  e.train = t;
  e.seeds = o.seeds;
  e.workers = o.workers;
  e.checkpoint_dir = dir / "checkpoints";
  return e;
}

train::SeedCallback seed_logger(std::ostream& log, const train::TrainConfig& t) {
  return [&log, kind = t.spec.kind, value = train::setting_value(t)](const train::SeedResult& r) {
    log << models::to_string(kind) << " value=" << format_real(value) << " seed=" << r.seed
        << " r2=" << std::setprecision(4) << r.r2 << " epochs=" << r.epochs << " best=" << r.best_epoch << " ("
        << std::fixed << std::setprecision(1) << r.seconds << " s)" << std::defaultfloat << std::endl;
  };
}

void write_reports(const fs::path& dir, std::span<const train::ExperimentReport> reports, bool table) {
  {
    auto os = open_out(dir / "report.txt");
    if (table) {
      train::write_comparison_table(os, reports);
      os << '\n';
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (i) os << "\n----\n\n";
      train::write_report(os, reports[i]);
    }
  }
  auto rows = open_out(dir / "report_rows.tsv");
  train::write_report_rows(rows, reports);
}

void check_common(const TrainOptions& o) {
  if (o.seeds.empty()) throw UsageError("--seeds selects no seeds");
  if (o.out.empty()) throw UsageError("--out is required");
  if (!fs::is_directory(o.dataset)) throw std::runtime_error("dataset directory '" + o.dataset.string() + "' not found");
}

std::vector<std::string> base_manifest_lines(const TrainOptions& o) {
  return {"dataset=" + fs::absolute(o.dataset).lexically_normal().string(),
          "dataset_fingerprint=" + dataset_fingerprint(o.dataset), "seeds=" + seed_string(o.seeds),
          "workers=" + std::to_string(o.workers)};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) {
      throw UsageError("bad seed '" + std::string(s) + "' in '" + std::string(text) + "'");
    }
    return std::stoull(std::string(s));
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, comma - pos);
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = number(item.substr(0, dots));
      const auto hi = number(item.substr(dots + 2));
      if (hi < lo) throw UsageError("empty seed range '" + std::string(item) + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(number(item));
    }
    pos = comma + 1;
  }
  return out;
}

std::vector<models::ModelKind> resolve_models(std::string_view name) {
  if (name == "all") return {std::begin(models::kAllModelKinds), std::end(models::kAllModelKinds)};
  try {
    return {models::parse_model_kind(name)};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

train::TrainConfig make_train_config(const TrainOptions& o, models::ModelKind kind, bool fan_out) {
  train::TrainConfig c;
  c.spec.kind = kind;
  c.spec.criterion = o.criterion;
  c.spec.pooled_grid = o.pooled_grid;
  if (models::is_chunked(kind)) {
    if (o.resolution && !fan_out) {
      throw UsageError("--resolution applies only to dist_mat, not " + std::string(models::to_string(kind)));
    }
    if (o.chunk_seconds) c.spec.chunk_seconds = *o.chunk_seconds;
  } else {
    if (o.chunk_seconds && !fan_out) {
      throw UsageError("--chunk-seconds does not apply to dist_mat (it consumes whole-recording matrices)");
    }
    if (o.resolution) c.spec.matrix_resolution = *o.resolution;
  }
  c.lr = o.lr;
  c.batch_size = o.batch_size;
  c.max_epochs = o.max_epochs;
  c.patience = o.patience;
  c.dtw_band = o.dtw_band;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::string dataset_fingerprint(const fs::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* name : {"manifest", "records.txt"}) {
    std::ifstream is(dir / name, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + (dir / name).string());
    std::ostringstream ss;
    ss << is.rdbuf();
    h = fnv1a(h, ss.str());
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void cmd_generate(const GenerateOptions& o, std::ostream& log) {
  if (o.generator.n == 0) throw UsageError("--n must be positive");
  if (o.out.empty()) throw UsageError("--out is required");
  const auto ds = data::generate_dataset(o.generator);
  data::save_dataset(ds, o.out);
  double seconds = 0.0;
  for (const auto& r : ds.records) seconds += r.contour.duration_seconds();
  log << "wrote " << ds.records.size() << " performances of " << ds.scores.size() << " scores to " << o.out.string()
      << " (mean duration " << std::fixed << std::setprecision(1)
      << seconds / static_cast<double>(ds.records.size()) << " s)" << std::defaultfloat << std::endl;
}

void cmd_train(const TrainOptions& o, std::ostream& log) {
  check_common(o);
  const auto kinds = resolve_models(o.model);
  const bool fan_out = kinds.size() > 1;
  std::vector<train::TrainConfig> configs;
  for (auto k : kinds) configs.push_back(make_train_config(o, k, fan_out));

  const auto t0 = std::chrono::steady_clock::now();
  const auto started = utc_timestamp();
  const auto dataset = data::load_dataset(o.dataset);
  std::vector<train::ExperimentReport> reports;
  for (const auto& c : configs) {
    const fs::path dir = fan_out ? o.out / std::string(models::to_string(c.spec.kind)) : o.out;
    fs::create_directories(dir);
    const auto t1 = std::chrono::steady_clock::now();
    const auto started_one = utc_timestamp();
    auto report = train::run_experiment(dataset, experiment_config(o, c, dir), seed_logger(log, c));
    write_reports(dir, std::span(&report, 1), false);
    RunManifest m{"train", started_one, base_manifest_lines(o)};
    for (auto& l : config_lines(c)) m.lines.push_back(std::move(l));
    m.lines.push_back("parameter_count=" + std::to_string(report.parameter_count));
    write_manifest(dir, m, elapsed(t1));
    log << models::to_string(c.spec.kind) << " median r2 " << format_real(report.summary.median) << std::endl;
    reports.push_back(std::move(report));
  }
  if (fan_out) {
    write_reports(o.out, reports, true);
    RunManifest m{"train", started, base_manifest_lines(o)};
    m.lines.push_back("model=all");
    m.lines.push_back("criterion=" + std::string(to_string(o.criterion)));
    write_manifest(o.out, m, elapsed(t0));
  }
}

void cmd_sweep(const SweepOptions& o, std::ostream& log) {
  check_common(o.base);
  const auto kinds = resolve_models(o.base.model);
  const auto values = o.values.empty() ? train::default_sweep_values(o.kind) : o.values;
  std::vector<models::ModelKind> applicable;
  for (auto k : kinds) {
    const bool ok = o.kind == train::SweepKind::chunk_size ? models::is_chunked(k) : !models::is_chunked(k);
    if (ok) applicable.push_back(k);
  }
  if (applicable.empty()) {
    throw UsageError(std::string("--kind ") + std::string(train::to_string(o.kind)) + " does not apply to model " +
                     o.base.model);
  }
  // Validate every cell before any training starts.
  std::vector<train::TrainConfig> cells;
  for (auto k : applicable) {
    TrainOptions opt = o.base;
    opt.chunk_seconds.reset();
    opt.resolution.reset();
    const auto base = make_train_config(opt, k, true);
    for (double v : values) {
      try {
        auto c = train::with_sweep_value(base, o.kind, v);
        c.validate();
        cells.push_back(c);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto started = utc_timestamp();
  const auto dataset = data::load_dataset(o.base.dataset);
  fs::create_directories(o.base.out);
  std::vector<train::ExperimentReport> reports;
  for (const auto& c : cells) {
    const fs::path dir = o.base.out / (std::string(models::to_string(c.spec.kind)) + "_" +
                                       format_real(train::setting_value(c)));
    fs::create_directories(dir);
    reports.push_back(train::run_experiment(dataset, experiment_config(o.base, c, o.base.out), seed_logger(log, c)));
    auto os = open_out(dir / "report.txt");
    train::write_report(os, reports.back());
  }
  write_reports(o.base.out, reports, true);
  {
    auto os = open_out(o.base.out / "comparison.tsv");
    train::write_comparison_table(os, reports);
  }
  RunManifest m{"sweep", started, base_manifest_lines(o.base)};
  m.lines.push_back("kind=" + std::string(train::to_string(o.kind)));
  std::string vs;
  for (std::size_t i = 0; i < values.size(); ++i) vs += (i ? "," : "") + format_real(values[i]);
  m.lines.push_back("values=" + vs);
  m.lines.push_back("model=" + o.base.model);
  for (auto& l : config_lines(cells.front())) {
    if (l.rfind("model=", 0) == 0 || l.rfind("chunk_seconds=", 0) == 0 || l.rfind("resolution=", 0) == 0) continue;
    m.lines.push_back(std::move(l));
  }
  write_manifest(o.base.out, m, elapsed(t0));
  train::write_comparison_table(log, reports);
}

Assessment cmd_assess(const AssessOptions& o) {
  for (const auto& f : {o.checkpoint, o.contour, o.score}) {
    if (!fs::is_regular_file(f)) throw std::runtime_error("file '" + f.string() + "' not found");
  }
  const auto manifest = models::read_model_manifest(models::manifest_path_for(o.checkpoint));
  if (o.model && models::parse_model_kind(*o.model) != manifest.spec.kind) {
    throw std::runtime_error("checkpoint holds a " + std::string(models::to_string(manifest.spec.kind)) +
                             " model, not " + *o.model);
  }
  auto model = models::load_model<train::Scalar>(o.checkpoint);
  const auto contour = signal::load_contour(o.contour);
  if (std::fabs(contour.frame_rate - signal::kFrameRate) > 1e-6) {
    throw std::runtime_error("contour frame rate " + format_real(contour.frame_rate) + " differs from the model's " +
                             format_real(signal::kFrameRate));
  }
  const auto score = signal::load_score(o.score);
  const auto ticks = signal::expand_score_to_ticks(score);
  const auto kind = model->spec().kind;
  const bool chunked = models::is_chunked(kind);
  if (o.dump_path) {
    const auto path = align::dtw_align(contour.frames, ticks);
    auto os = open_out(*o.dump_path);
    for (const auto& [f, t] : path.pairs) os << f << ' ' << t << '\n';
  }
  auto rec = train::prepare_single(contour.frames, ticks, chunked);
  train::MatrixCache cache(model->spec().matrix_resolution, 0);
  const auto pred = train::predict(*model, std::span(&rec, 1), train::ChunkPolicy::grid, &cache);
  return {model->spec().criterion, kind, pred[0]};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-informed music performance assessment toolkit"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.set_config("--config", "", "Read flags from an INI/TOML config file (flags given on the command line win)");
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_band = "middle";
  auto* g = app.add_subcommand("generate", "Write a synthetic dataset");
  g->add_option("--band", gen_band, "Band preset: middle or symphonic")->capture_default_str();
  g->add_option("--n", gen.generator.n, "Number of performances")->capture_default_str();
  g->add_option("--seed", gen.generator.seed, "Generator seed")->capture_default_str();
  g->add_option("--scores", gen.generator.score_count, "Distinct scores per dataset")->capture_default_str();
  g->add_option("--label-noise", gen.generator.label_noise, "Std of Gaussian rating noise")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainOptions tr;
  std::string criterion = "note_accuracy";
  std::string seeds = "0..9";
  std::optional<std::size_t> band;
  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--dataset", tr.dataset, "Dataset directory written by 'generate'")->required();
    c->add_option("--model", tr.model, "si_convnet, joint_embed, dist_mat, pc_baseline or all")
        ->capture_default_str();
    c->add_option("--criterion", criterion, "musicality, note_accuracy or rhythmic_accuracy")->capture_default_str();
    c->add_option("--seeds", seeds, "Seed list, e.g. 0..9 or 1,3,5")->capture_default_str();
    c->add_option("--out", tr.out, "Output directory")->required();
    c->add_option("--lr", tr.lr, "SGD learning rate")->capture_default_str();
    c->add_option("--batch-size", tr.batch_size, "Mini-batch size")->capture_default_str();
    c->add_option("--max-epochs", tr.max_epochs, "Epoch limit")->capture_default_str();
    c->add_option("--patience", tr.patience, "Early-stopping patience in epochs")->capture_default_str();
    c->add_option("--pooled-grid", tr.pooled_grid, "dist_mat adaptive pooling grid")->capture_default_str();
    c->add_option("--dtw-band", band, "Sakoe-Chiba band radius in cells (default: unconstrained)");
  };
  auto* t = app.add_subcommand("train", "Train and evaluate one model per seed");
  add_train_flags(t);
  std::optional<double> chunk_seconds;
  std::optional<std::size_t> resolution;
  t->add_option("--chunk-seconds", chunk_seconds, "Chunk length for sequence models (default 10)");
  t->add_option("--resolution", resolution, "Distance-matrix size for dist_mat (default 600)");

  auto* s = app.add_subcommand("sweep", "Compare chunk sizes or matrix resolutions");
  add_train_flags(s);
  std::string sweep_kind = "chunk";
  std::vector<double> sweep_values;
  s->add_option("--kind", sweep_kind, "chunk (default values 5,10) or resolution (400,600,900)")
      ->capture_default_str();
  s->add_option("--values", sweep_values, "Values to sweep")->delimiter(',');

  AssessOptions as;
  std::optional<std::string> as_model;
  std::optional<std::string> dump;
  auto* a = app.add_subcommand("assess", "Rate one performance with a trained checkpoint");
  a->add_option("--checkpoint", as.checkpoint, "Checkpoint file (its .manifest must sit beside it)")->required();
  a->add_option("--contour", as.contour, "Contour file")->required();
  a->add_option("--score", as.score, "Score file")->required();
  a->add_option("--model", as_model, "Expected model kind; rejected if the checkpoint differs");
  a->add_option("--dump-path", dump, "Write the DTW path as '<frame> <tick>' lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kToolkitVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (g->parsed()) {
      try {
        gen.generator.band = data::parse_band(gen_band);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      cmd_generate(gen, err);
    } else if (t->parsed() || s->parsed()) {
      try {
        tr.criterion = parse_criterion(criterion);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      tr.seeds = parse_seed_list(seeds);
      tr.dtw_band = band;
      tr.workers = train::workers_from_env();
      if (t->parsed()) {
        tr.chunk_seconds = chunk_seconds;
        tr.resolution = resolution;
        cmd_train(tr, err);
      } else {
        cmd_sweep({tr, train::parse_sweep_kind(sweep_kind), sweep_values}, err);
      }
    } else if (a->parsed()) {
      as.model = as_model;
      if (dump) as.dump_path = *dump;
      const auto r = cmd_assess(as);
      out << to_string(r.criterion) << ' ' << format_real(r.rating) << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mpa::cli
