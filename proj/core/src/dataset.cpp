#include "mpa/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mpa/signal/text_formats.hpp"

namespace mpa::data {

namespace fs = std::filesystem;
using signal::format_real;
using signal::parse_real;

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

std::map<std::string, std::string> read_key_values(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(file.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::size_t Dataset::score_index(const AssessmentRecord& record) const {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].id == record.score_id) return i;
  }
  throw std::out_of_range("record " + record.id + " references unknown score " + record.score_id);
}

Dataset generate_dataset(const GeneratorConfig& config) {
  if (config.n == 0) throw std::invalid_argument("dataset size must be positive");
  if (config.score_count == 0) throw std::invalid_argument("need at least one score");
  if (config.label_noise < 0.0) throw std::invalid_argument("label noise must be non-negative");

  Dataset ds;
  ds.config = config;
  for (std::size_t k = 0; k < config.score_count; ++k) {
    Rng rng = make_rng(derive_seed(config.seed, streams::scores), k);
    ds.scores.push_back({numbered("s", k, 2), generate_score(rng, config.band)});
  }
  ds.records.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    // One stream per record keeps records independent of generation order.
    Rng rng = make_rng(derive_seed(config.seed, streams::performances), i);
    AssessmentRecord rec;
    rec.id = numbered("p", i, 5);
    rec.band = config.band;
    const auto k = std::uniform_int_distribution<std::size_t>(0, config.score_count - 1)(rng);
    rec.score_id = ds.scores[k].id;
    rec.degradation = sample_degradation(config.band, rng);
    rec.contour = render_performance(ds.scores[k].score, rec.degradation, rng);
    Rng noise = make_rng(derive_seed(config.seed, streams::label_noise), i);
    rec.ratings = add_label_noise(ground_truth_ratings(rec.degradation), config.label_noise, noise);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir / "scores");
  fs::create_directories(dir / "contours");
  {
    std::ofstream os(dir / "manifest");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
    os << "generator=mpa-synthetic\n"
       << "format_version=1\n"
       << "seed=" << ds.config.seed << '\n'
       << "n=" << ds.config.n << '\n'
       << "band=" << to_string(ds.config.band) << '\n'
       << "score_count=" << ds.config.score_count << '\n'
       << "label_noise=" << format_real(ds.config.label_noise) << '\n'
       << "frame_rate=" << format_real(signal::kFrameRate) << '\n';
  }
  for (const auto& s : ds.scores) signal::save_score(dir / "scores" / (s.id + ".score"), s.score);
  std::ofstream rec(dir / "records.txt");
  if (!rec) throw std::runtime_error("cannot write records in " + dir.string());
  for (const auto& r : ds.records) {
    signal::save_contour(dir / "contours" / (r.id + ".contour"), r.contour);
    rec << r.id << ' ' << r.score_id << ' ' << to_string(r.band) << ' '
        << format_real(r.ratings.musicality) << ' ' << format_real(r.ratings.note_accuracy) << ' '
        << format_real(r.ratings.rhythmic_accuracy) << ' ' << format_real(r.degradation.wrong_note_rate)
        << ' ' << format_real(r.degradation.intonation_std) << ' '
        << format_real(r.degradation.tempo_jitter) << ' ' << format_real(r.degradation.onset_noise)
        << '\n';
  }
  if (!rec) throw std::runtime_error("write failed for records in " + dir.string());
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory " + dir.string() + " not found");
  const auto kv = read_key_values(dir / "manifest");
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("dataset manifest missing '" + std::string(key) + "'");
    return it->second;
  };
  Dataset ds;
  ds.config.seed = std::stoull(need("seed"));
  ds.config.n = std::stoull(need("n"));
  ds.config.band = parse_band(need("band"));
  ds.config.score_count = std::stoull(need("score_count"));
  ds.config.label_noise = parse_real(need("label_noise"), "manifest");

  std::vector<fs::path> score_files;
  for (const auto& e : fs::directory_iterator(dir / "scores")) {
    if (e.path().extension() == ".score") score_files.push_back(e.path());
  }
  std::sort(score_files.begin(), score_files.end());
  for (const auto& f : score_files) ds.scores.push_back({f.stem().string(), signal::load_score(f)});

  std::ifstream is(dir / "records.txt");
  if (!is) throw std::runtime_error("cannot open records.txt in " + dir.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = "records.txt:" + std::to_string(lineno);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.size() != 6 && tok.size() != 10) throw std::runtime_error(ctx + ": expected 6 or 10 fields");
    AssessmentRecord r;
    r.id = tok[0];
    r.score_id = tok[1];
    r.band = parse_band(tok[2]);
    r.ratings.musicality = parse_real(tok[3], ctx);
    r.ratings.note_accuracy = parse_real(tok[4], ctx);
    r.ratings.rhythmic_accuracy = parse_real(tok[5], ctx);
    if (tok.size() == 10) {
      r.degradation.wrong_note_rate = parse_real(tok[6], ctx);
      r.degradation.intonation_std = parse_real(tok[7], ctx);
      r.degradation.tempo_jitter = parse_real(tok[8], ctx);
      r.degradation.onset_noise = parse_real(tok[9], ctx);
    }
    for (auto c : kAllCriteria) {
      const double v = r.ratings.get(c);
      if (!(v >= 0.0 && v <= 1.0)) throw std::runtime_error(ctx + ": rating outside [0, 1]");
    }
    r.contour = signal::load_contour(dir / "contours" / (r.id + ".contour"));
    ds.records.push_back(std::move(r));
    ds.score_index(ds.records.back());
  }
  if (ds.records.size() != ds.config.n) {
    throw std::runtime_error("dataset manifest lists " + std::to_string(ds.config.n) + " records, found " +
                             std::to_string(ds.records.size()));
  }
  return ds;
}

DatasetSplit split_dataset(std::size_t n, Rng& rng) {
  if (n < 3) throw std::invalid_argument("need at least 3 records to split");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto tenth = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / 10.0)));
  DatasetSplit s;
  s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(tenth));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(tenth), idx.begin() + static_cast<std::ptrdiff_t>(2 * tenth));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(2 * tenth), idx.end());
  return s;
}

}  // namespace mpa::data
