#include "mpa/signal/text_formats.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mpa::signal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Parses "key=value" and returns value, or throws.
std::string expect_key(const std::string& token, const std::string& key, const std::string& ctx) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || token.substr(0, eq) != key) {
    throw FormatError(ctx + ": expected '" + key + "=<value>', got '" + token + "'");
  }
  return token.substr(eq + 1);
}

long parse_int(const std::string& token, const std::string& ctx) {
  long v = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw FormatError(ctx + ": bad integer '" + token + "'");
  return v;
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw FormatError("cannot format value");
  return std::string(buf.data(), ptr);
}

double parse_real(const std::string& token, const std::string& ctx) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw FormatError(ctx + ": bad number '" + token + "'");
  return v;
}

void write_contour(std::ostream& os, const PitchContour& contour) {
  os << "frame_rate=" << format_real(contour.frame_rate) << '\n';
  for (double f : contour.frames) os << format_real(f) << '\n';
}

PitchContour read_contour(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(source + ": empty contour file");
  PitchContour c;
  c.frame_rate = parse_real(expect_key(trim(line), "frame_rate", source + ":1"), source + ":1");
  c.frames.clear();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    c.frames.push_back(parse_real(t, source + ":" + std::to_string(lineno)));
  }
  if (c.frames.empty()) throw FormatError(source + ": contour has no frames");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
  return c;
}

void write_score(std::ostream& os, const Score& score) {
  os << "ticks_per_beat=" << score.ticks_per_beat << " tempo_bpm=" << format_real(score.tempo_bpm)
     << '\n';
  for (const auto& n : score.notes) os << n.midi << ' ' << n.ticks << '\n';
}

Score read_score(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(source + ": empty score file");
  Score s;
  {
    std::istringstream header(trim(line));
    std::string tpb, tempo;
    header >> tpb >> tempo;
    s.ticks_per_beat =
        static_cast<int>(parse_int(expect_key(tpb, "ticks_per_beat", source + ":1"), source + ":1"));
    s.tempo_bpm = parse_real(expect_key(tempo, "tempo_bpm", source + ":1"), source + ":1");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    const std::string ctx = source + ":" + std::to_string(lineno);
    std::istringstream fields(t);
    std::string pitch, ticks, extra;
    if (!(fields >> pitch >> ticks) || (fields >> extra)) {
      throw FormatError(ctx + ": expected '<midi> <ticks>'");
    }
    s.notes.push_back({static_cast<int>(parse_int(pitch, ctx)), static_cast<int>(parse_int(ticks, ctx))});
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
  return s;
}

void save_contour(const std::filesystem::path& file, const PitchContour& contour) {
  std::ofstream os(file);
  if (!os) throw FormatError("cannot write " + file.string());
  write_contour(os, contour);
  if (!os) throw FormatError("write failed for " + file.string());
}

PitchContour load_contour(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw FormatError("cannot open contour file " + file.string());
  return read_contour(is, file.string());
}

void save_score(const std::filesystem::path& file, const Score& score) {
  std::ofstream os(file);
  if (!os) throw FormatError("cannot write " + file.string());
  write_score(os, score);
  if (!os) throw FormatError("write failed for " + file.string());
}

Score load_score(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw FormatError("cannot open score file " + file.string());
  return read_score(is, file.string());
}

}  // namespace mpa::signal
