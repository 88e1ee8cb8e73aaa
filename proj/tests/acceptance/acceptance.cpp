// Acceptance checks. Prints one PASS/FAIL line per criterion followed by
// indented detail lines, and exits non-zero if any selected criterion fails.
//
//   mpa_acceptance                       criteria 1-3, 7, 8 (fast)
//   mpa_acceptance --criteria 4,5,6      learning checks, smoke tier
//   mpa_acceptance --tier full --criteria 4,5,6

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "model_cases.hpp"
#include "mpa/align/dtw.hpp"
#include "mpa/cli/commands.hpp"
#include "mpa/data/dataset.hpp"
#include "mpa/signal/distance_matrix.hpp"
#include "mpa/signal/pitch.hpp"
#include "mpa/train/experiment.hpp"
#include "mpa/train/metrics.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
namespace mt = mpa::testing;
using mpa::Rng;
using mpa::models::ModelKind;
using Clock = std::chrono::steady_clock;
using TD = mpa::tensor::Tensor<double>;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { details.push_back("info  " + what); }
};

// 1. Finite-difference gradient checks at double precision.
Outcome gradients(std::size_t instances, std::size_t model_sample) {
  constexpr double kTolerance = 1e-4;
  Outcome o;
  const auto start = Clock::now();
  for (const auto& op : mt::op_cases()) {
    Rng rng(std::hash<std::string>{}(op.name) ^ 0x5eed);
    double worst = 0.0;
    std::size_t checked = 0, nonsmooth = 0;
    for (std::size_t i = 0; i < instances; ++i) {
      const auto r = op.run(rng);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      nonsmooth += r.nonsmooth;
    }
    o.require(worst < kTolerance && nonsmooth * 20 < checked,
              "op " + op.name + ": max rel error " + fixed(worst * 1e6, 3) + "e-6 over " +
                  std::to_string(checked) + " elements (" + std::to_string(nonsmooth) + " at kinks)");
  }
  for (auto kind : mpa::models::kAllModelKinds) {
    double worst = 0.0;
    std::size_t checked = 0, nonsmooth = 0;
    for (std::size_t i = 0; i < instances; ++i) {
      const auto r = mt::model_gradcheck(kind, i, model_sample);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      nonsmooth += r.nonsmooth;
    }
    o.require(worst < kTolerance && nonsmooth * 20 < checked,
              "model " + std::string(mpa::models::to_string(kind)) + ": max rel error " + fixed(worst * 1e6, 3) +
                  "e-6 over " + std::to_string(checked) + " elements (" + std::to_string(nonsmooth) + " at kinks)");
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 120.0, std::to_string(instances) + " instances each in " + fixed(elapsed, 1) + " s (< 120 s)");
  return o;
}

// 2. DTW against exhaustive path enumeration, convolutions against direct
// summation.
Outcome oracles() {
  Outcome o;
  Rng rng(2);
  std::size_t dtw_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto L = mt::random_size(rng, 1, 8), T = mt::random_size(rng, 1, 8);
    std::vector<double> a(L), b(T);
    // Alternate integer pitches (frequent ties) with continuous ones.
    std::uniform_int_distribution<int> note(58, 64);
    std::uniform_real_distribution<double> real(58.0, 64.0);
    for (auto& x : a) x = trial % 2 ? real(rng) : note(rng);
    for (auto& x : b) x = trial % 2 ? real(rng) : note(rng);
    const auto oracle = mt::brute_force_dtw(a, b);
    const auto p = mpa::align::dtw_align(a, b);
    if (p.total_cost == oracle.best && p.pairs == mt::preferred_path(oracle.optimal)) ++dtw_ok;
  }
  o.require(dtw_ok == 200, "dtw_align equals brute force (cost and tie-broken path) on " + std::to_string(dtw_ok) +
                               "/200 instances, L,T <= 8");

  std::size_t c1 = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto B = mt::random_size(rng, 1, 3), Ci = mt::random_size(rng, 1, 4), Co = mt::random_size(rng, 1, 4);
    const auto K = mt::random_size(rng, 1, 7), L = mt::random_size(rng, K, 24);
    const auto stride = mt::random_size(rng, 1, 3), pad = mt::random_size(rng, 0, K);
    const auto x = mt::random_values(B * Ci * L, rng), w = mt::random_values(Co * Ci * K, rng);
    const auto bias = mt::random_values(Co, rng);
    const auto got = mpa::tensor::conv1d(TD::from_values({B, Ci, L}, x), TD::from_values({Co, Ci, K}, w),
                                         TD::from_values({Co}, bias), stride, pad);
    if (std::vector<double>(got.values().begin(), got.values().end()) ==
        mt::conv1d_oracle(x, B, Ci, L, w, Co, K, bias, stride, pad)) {
      ++c1;
    }
  }
  o.require(c1 == 200, "conv1d bit-identical to direct summation on " + std::to_string(c1) + "/200 shapes");

  std::size_t c2 = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto B = mt::random_size(rng, 1, 2), Ci = mt::random_size(rng, 1, 3), Co = mt::random_size(rng, 1, 3);
    const auto KH = mt::random_size(rng, 1, 3), KW = mt::random_size(rng, 1, 3);
    const auto H = mt::random_size(rng, KH, 10), W = mt::random_size(rng, KW, 10);
    const auto stride = mt::random_size(rng, 1, 2), pad = mt::random_size(rng, 0, 1);
    const auto x = mt::random_values(B * Ci * H * W, rng), w = mt::random_values(Co * Ci * KH * KW, rng);
    const auto bias = mt::random_values(Co, rng);
    const auto got = mpa::tensor::conv2d(TD::from_values({B, Ci, H, W}, x), TD::from_values({Co, Ci, KH, KW}, w),
                                         TD::from_values({Co}, bias), stride, pad);
    if (std::vector<double>(got.values().begin(), got.values().end()) ==
        mt::conv2d_oracle(x, B, Ci, H, W, w, Co, KH, KW, bias, stride, pad)) {
      ++c2;
    }
  }
  o.require(c2 == 200, "conv2d bit-identical to direct summation on " + std::to_string(c2) + "/200 shapes");
  return o;
}

// Cheapest monotone path through a distance matrix within a +-2 cell band.
mpa::align::WarpPath band_path(const mpa::signal::DistanceMatrix& m) {
  std::vector<double> rows(m.resolution), cols(m.resolution);
  for (std::size_t i = 0; i < m.resolution; ++i) rows[i] = cols[i] = static_cast<double>(i);
  mpa::align::DtwOptions band;
  band.band_radius = 2;
  return mpa::align::dtw_align(
      rows, cols,
      [&](double i, double j) { return m.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); }, band);
}

// 3. Pitch and distance-matrix identities.
Outcome signal_identities() {
  using namespace mpa::signal;
  Outcome o;
  Rng rng(3);
  std::uniform_real_distribution<double> pitch(1.0, 100.0);
  std::uniform_int_distribution<int> octave(-2, 2), semitone(1, 100);
  double max_d = 0.0, max_shift_error = 0.0;
  std::size_t exact_grid = 0;
  for (int i = 0; i < 10000; ++i) {
    const double p = pitch(rng), s = pitch(rng);
    const double d = wrapped_distance(p, s);
    max_d = std::max(max_d, d);
    if (d < 0.0) max_d = 1e9;
    const double shifted = p + 12.0 * octave(rng);
    if (shifted > 0.0) max_shift_error = std::max(max_shift_error, std::fabs(wrapped_distance(shifted, s) - d));
    // Quarter-tone pitches are exact in binary, so their shifts are too.
    const double q = semitone(rng) / 4.0 + 24.0, r = semitone(rng) / 4.0 + 24.0;
    if (wrapped_distance(q + 12.0 * octave(rng), r) == wrapped_distance(q, r)) ++exact_grid;
  }
  o.require(max_d <= kMaxWrappedDistance, "wrapped_distance in [0, 6] on 10^4 random pairs (max " + fixed(max_d, 6) + ")");
  o.require(max_shift_error <= 1e-12 && exact_grid == 10000,
            "octave shift invariance on 10^4 pairs: exact on " + std::to_string(exact_grid) +
                "/10^4 quarter-tone pairs, max deviation " + fixed(max_shift_error * 1e15, 1) +
                "e-15 on real pitches (rounding of p + 12k)");

  bool octaves_exact = true;
  for (int k = -6; k <= 6; ++k) octaves_exact &= hz_to_midi(std::ldexp(440.0, k)) == 69.0 + 12.0 * k;
  std::uniform_real_distribution<double> hz(20.0, 4000.0);
  double max_law_error = 0.0;
  std::size_t law_exact = 0;
  for (int i = 0; i < 10000; ++i) {
    const double f = hz(rng);
    const double e = std::fabs(hz_to_midi(2.0 * f) - (hz_to_midi(f) + 12.0));
    max_law_error = std::max(max_law_error, e);
    if (e == 0.0) ++law_exact;
  }
  o.require(octaves_exact && max_law_error <= 1e-12,
            "hz_to_midi(440 * 2^k) == 69 + 12k for k in [-6, 6]; hz_to_midi(2f) - hz_to_midi(f) == 12 exactly on " +
                std::to_string(law_exact) + "/10^4 random f, max deviation " + fixed(max_law_error * 1e15, 1) +
                "e-15");

  // A rendering at exactly 20 frames per tick with one matrix row per tick
  // makes every cell cover whole frames of single notes.
  std::size_t zero_paths = 0;
  constexpr int kScores = 20;
  for (int trial = 0; trial < kScores; ++trial) {
    auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
    score.tempo_bpm = 60.0 * kFrameRate / (20.0 * score.ticks_per_beat);
    const auto m = build_distance_matrix(mpa::data::render_exact(score), score, score.total_ticks());
    if (band_path(m).total_cost == 0.0) ++zero_paths;
  }
  o.require(zero_paths == kScores, "grid-aligned perfect rendering: zero-valued monotone path within +-2 cells on " +
                                       std::to_string(zero_paths) + "/" + std::to_string(kScores) + " scores");

  // Generic case: default tempo, 600 x 600. Cells straddling note
  // boundaries average two notes, so the path is near zero but not exact.
  double worst_cell = 0.0, mean_cell = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto score = mpa::data::generate_score(rng, mpa::data::Band::middle);
    const auto m = build_distance_matrix(mpa::data::render_exact(score), score, 600);
    const auto p = band_path(m);
    for (const auto& [i, j] : p.pairs) worst_cell = std::max(worst_cell, m.at(i, j));
    mean_cell += p.total_cost / static_cast<double>(p.pairs.size()) / 5.0;
  }
  o.note("default-tempo perfect rendering at 600 x 600: best +-2 band path has mean cell " + fixed(mean_cell, 5) +
         ", max cell " + fixed(worst_cell, 4) + " (not exactly zero off the frame grid)");
  return o;
}

struct Tier {
  std::string name;
  std::size_t n;
  std::size_t seeds;
  double threshold;
  double budget_seconds;
};

Tier tier_named(const std::string& name) {
  if (name == "full") return {"full", 2000, 10, 0.5, 7200.0};
  return {"smoke", 500, 3, 0.3, 900.0};
}

struct LearningOptions {
  Tier tier;
  std::size_t workers = 1;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> patience;
  std::optional<fs::path> rows_out;
  // Criterion 4 models; the others are reported as not run.
  std::vector<ModelKind> models{std::begin(mpa::models::kAllModelKinds), std::end(mpa::models::kAllModelKinds)};
};

class Learning {
 public:
  explicit Learning(LearningOptions options) : opt_(std::move(options)) {
    for (std::size_t s = 0; s < opt_.tier.seeds; ++s) seeds_.push_back(s);
  }

  const mpa::data::Dataset& dataset(mpa::data::Band band) {
    auto it = datasets_.find(band);
    if (it == datasets_.end()) {
      mpa::data::GeneratorConfig g;
      g.n = opt_.tier.n;
      g.band = band;
      g.seed = 0;
      it = datasets_.emplace(band, mpa::data::generate_dataset(g)).first;
    }
    return it->second;
  }

  // Median test R² on note_accuracy; cached so criteria share runs.
  double median(ModelKind kind, mpa::data::Band band, std::optional<double> chunk_seconds = {}) {
    const auto key = std::make_tuple(kind, band, chunk_seconds.value_or(0.0));
    if (auto it = medians_.find(key); it != medians_.end()) return it->second;
    mpa::train::ExperimentConfig cfg;
    cfg.train.spec.kind = kind;
    if (chunk_seconds) cfg.train.spec.chunk_seconds = *chunk_seconds;
    if (opt_.max_epochs) cfg.train.max_epochs = *opt_.max_epochs;
    if (opt_.patience) cfg.train.patience = *opt_.patience;
    cfg.seeds = seeds_;
    cfg.workers = opt_.workers;
    const auto start = Clock::now();
    const auto report = mpa::train::run_experiment(dataset(band), cfg);
    const double elapsed = seconds_since(start);
    total_seconds_ += elapsed;
    std::cerr << "  trained " << mpa::models::to_string(kind) << " band=" << mpa::data::to_string(band)
              << " value=" << mpa::train::setting_value(report.config) << " median r2 "
              << fixed(report.summary.median, 4) << " in " << fixed(elapsed, 0) << " s\n";
    reports_.push_back(report);
    if (opt_.rows_out) {
      std::ofstream rows(*opt_.rows_out);
      mpa::train::write_report_rows(rows, reports_);
    }
    return medians_[key] = report.summary.median;
  }

  std::string settings() const {
    std::string s = opt_.tier.name + " tier: n=" + std::to_string(opt_.tier.n) + ", " +
                    std::to_string(opt_.tier.seeds) + " seeds";
    if (opt_.max_epochs || opt_.patience) {
      s += ", reduced schedule (max_epochs " +
           std::to_string(opt_.max_epochs.value_or(mpa::train::kDefaultMaxEpochs)) + ", patience " +
           std::to_string(opt_.patience.value_or(mpa::train::kDefaultPatience)) + ")";
    }
    return s;
  }
  const Tier& tier() const { return opt_.tier; }
  bool selected(ModelKind kind) const {
    return std::find(opt_.models.begin(), opt_.models.end(), kind) != opt_.models.end();
  }
  double total_seconds() const { return total_seconds_; }

 private:
  LearningOptions opt_;
  std::vector<std::uint64_t> seeds_;
  std::map<mpa::data::Band, mpa::data::Dataset> datasets_;
  std::map<std::tuple<ModelKind, mpa::data::Band, double>, double> medians_;
  std::vector<mpa::train::ExperimentReport> reports_;
  double total_seconds_ = 0.0;
};

// 4. Every model learns note accuracy on the default synthetic set.
Outcome learning_sanity(Learning& l) {
  Outcome o;
  o.note(l.settings());
  const double before = l.total_seconds();
  for (auto kind : mpa::models::kAllModelKinds) {
    if (!l.selected(kind)) {
      o.require(false, std::string(mpa::models::to_string(kind)) + " not run (--models)");
      continue;
    }
    const double m = l.median(kind, mpa::data::Band::middle);
    o.require(m >= l.tier().threshold, std::string(mpa::models::to_string(kind)) + " median test R² " + fixed(m, 4) +
                                           " (>= " + fixed(l.tier().threshold, 1) + ")");
  }
  const double elapsed = l.total_seconds() - before;
  o.require(elapsed <= l.tier().budget_seconds,
            "runtime " + fixed(elapsed / 60.0, 1) + " min (<= " + fixed(l.tier().budget_seconds / 60.0, 0) + " min)");
  return o;
}

// 5. The score-informed joint embedding beats the score-free baseline.
Outcome score_advantage(Learning& l) {
  Outcome o;
  o.note(l.settings());
  const double joint = l.median(ModelKind::joint_embed, mpa::data::Band::middle);
  const double pc = l.median(ModelKind::pc_baseline, mpa::data::Band::middle);
  o.require(joint >= pc + 0.05, "joint_embed " + fixed(joint, 4) + " vs pc_baseline " + fixed(pc, 4) +
                                    " (margin " + fixed(joint - pc, 4) + ", need >= 0.05)");
  return o;
}

// 6. Ten-second chunks do at least as well as five-second ones.
Outcome chunk_ordering(Learning& l) {
  Outcome o;
  o.note(l.settings() + ", symphonic band");
  for (auto kind : {ModelKind::si_convnet, ModelKind::joint_embed}) {
    const double five = l.median(kind, mpa::data::Band::symphonic, 5.0);
    const double ten = l.median(kind, mpa::data::Band::symphonic, 10.0);
    o.require(ten >= five, std::string(mpa::models::to_string(kind)) + " 10 s " + fixed(ten, 4) + " vs 5 s " +
                               fixed(five, 4) + (ten >= five ? "" : "  <- ordering not reproduced"));
  }
  return o;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 7. Identical training runs and checkpoint round trips.
Outcome reproducibility(const fs::path& work) {
  Outcome o;
  fs::remove_all(work);
  fs::create_directories(work);
  std::ostringstream log;
  mpa::cli::GenerateOptions gen;
  gen.generator.n = 40;
  gen.generator.seed = 7;
  gen.out = work / "data";
  mpa::cli::cmd_generate(gen, log);

  mpa::cli::TrainOptions t;
  t.dataset = gen.out;
  t.model = "all";
  t.seeds = {0, 1};
  t.max_epochs = 3;
  t.batch_size = 4;
  t.resolution = 297;
  for (const char* run : {"run_a", "run_b"}) {
    t.out = work / run;
    mpa::cli::cmd_train(t, log);
  }
  const auto a = slurp(work / "run_a" / "report_rows.tsv");
  const auto b = slurp(work / "run_b" / "report_rows.tsv");
  const auto rows = static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n'));
  o.require(!a.empty() && a == b, "two cmd_train runs (--model all, seeds 0..1) give byte-identical report rows (" +
                                      std::to_string(rows) + " lines)");
  o.require(slurp(work / "run_a" / "report.txt") == slurp(work / "run_b" / "report.txt"),
            "and byte-identical reports");

  // Trained checkpoints reload to bit-identical test predictions.
  const auto dataset = mpa::data::load_dataset(gen.out);
  const auto split = mpa::train::default_split(dataset);
  for (auto kind : mpa::models::kAllModelKinds) {
    mpa::train::TrainConfig cfg;
    cfg.spec.kind = kind;
    cfg.spec.matrix_resolution = 297;
    cfg.max_epochs = 2;
    cfg.batch_size = 4;
    auto trained = mpa::train::train(dataset, split, cfg);
    const auto file = work / (std::string(mpa::models::to_string(kind)) + ".ckpt");
    mpa::models::save_model(*trained.model, file);
    auto loaded = mpa::models::load_model<mpa::train::Scalar>(file);
    const auto x = mpa::train::evaluate(*trained.model, dataset, split.test, cfg);
    const auto y = mpa::train::evaluate(*loaded, dataset, split.test, cfg);
    const bool same_state = trained.model->state() == loaded->state();
    o.require(same_state && x.predictions == y.predictions,
              std::string(mpa::models::to_string(kind)) + " checkpoint round trip: " +
                  std::to_string(x.predictions.size()) + " test predictions bit-identical");
  }
  fs::remove_all(work);
  return o;
}

// 8. R² on hand-computed cases.
Outcome r2_cases() {
  using mpa::train::r2;
  Outcome o;
  struct Case {
    std::vector<double> pred, truth;
    double expected;
    const char* why;
  };
  const std::vector<Case> cases{
      {{0, 1}, {0, 1}, 1.0, "pred == truth"},
      {{0.5, 0.5}, {0, 1}, 0.0, "pred == mean(truth)"},
      {{0, 0}, {0, 1}, -1.0, "truth (0,1), pred (0,0): 1 - 1/0.5"},
      {{1, 2, 3, 5}, {1, 2, 3, 4}, 0.8, "truth (1,2,3,4), pred (1,2,3,5): 1 - 1/5"},
      {{2.5, 2.5, 2.5, 2.5}, {1, 2, 3, 4}, 0.0, "constant mean predictor"},
      {{4, 3, 2, 1}, {1, 2, 3, 4}, -3.0, "reversed: 1 - 20/5"},
  };
  for (const auto& c : cases) {
    const double got = r2(c.pred, c.truth);
    o.require(got == c.expected, std::string(c.why) + " -> " + fixed(got, 17));
  }
  bool rejected = false;
  try {
    r2(std::vector<double>{1, 2}, std::vector<double>{3, 3});
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  o.require(rejected, "zero truth variance rejected");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string criteria_text = "1,2,3,7,8";
  std::string tier = "smoke";
  std::size_t instances = 20, sample = 16;
  LearningOptions learning;
  learning.workers = mpa::train::workers_from_env();
  std::string work = (fs::temp_directory_path() / "mpa_acceptance").string();
  std::string rows_out;
  std::string models = "all";
  app.add_option("--criteria", criteria_text, "Comma-separated criteria to run (1-8)")->capture_default_str();
  app.add_option("--tier", tier, "Learning tier for criteria 4-6: smoke or full")
      ->check(CLI::IsMember({"smoke", "full"}))
      ->capture_default_str();
  app.add_option("--instances", instances, "Gradient-check instances per op and model")->capture_default_str();
  app.add_option("--sample", sample, "Elements checked per model parameter tensor (0 = all)")->capture_default_str();
  app.add_option("--workers", learning.workers, "Seeds trained in parallel")->capture_default_str();
  app.add_option("--max-epochs", learning.max_epochs, "Override the epoch limit for criteria 4-6");
  app.add_option("--patience", learning.patience, "Override early-stopping patience for criteria 4-6");
  app.add_option("--work-dir", work, "Scratch directory")->capture_default_str();
  app.add_option("--rows-out", rows_out, "Write per-seed learning rows here as runs finish");
  app.add_option("--models", models, "Models trained for criterion 4: all or a comma-separated list")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  std::set<int> criteria;
  {
    std::stringstream ss(criteria_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.size() != 1 || item[0] < '1' || item[0] > '8') {
        std::cerr << "unknown criterion '" << item << "'\n";
        return 2;
      }
      criteria.insert(item[0] - '0');
    }
  }
  learning.tier = tier_named(tier);
  if (models != "all") {
    learning.models.clear();
    std::stringstream ss(models);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) learning.models.push_back(mpa::models::parse_model_kind(item));
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
  }
  if (!rows_out.empty()) learning.rows_out = rows_out;
  Learning runs(learning);

  bool all = true;
  for (int c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    std::string title;
    try {
      switch (c) {
        case 1: title = "gradient correctness"; o = gradients(instances, sample); break;
        case 2: title = "oracle equivalence"; o = oracles(); break;
        case 3: title = "signal identities"; o = signal_identities(); break;
        case 4: title = "learning sanity"; o = learning_sanity(runs); break;
        case 5: title = "score-informed advantage"; o = score_advantage(runs); break;
        case 6: title = "chunk-size ordering"; o = chunk_ordering(runs); break;
        case 7: title = "reproducibility"; o = reproducibility(fs::path(work) / "repro"); break;
        case 8: title = "r2 hand cases"; o = r2_cases(); break;
      }
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    all &= o.pass;
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << " ("
              << fixed(seconds_since(start), 1) << " s)\n";
    for (const auto& d : o.details) std::cout << "    " << d << '\n';
    std::cout.flush();
  }
  return all ? 0 : 1;
}
