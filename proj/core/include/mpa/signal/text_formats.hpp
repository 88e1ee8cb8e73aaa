#pragma once

// Plain-text contour and score files.
//
//   contour:  frame_rate=<real>
//             <pitch_midi_float>      one per frame, 0 = unvoiced
//
//   score:    ticks_per_beat=<int> tempo_bpm=<real>
//             <midi_int> <ticks_int>  one per note

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mpa/signal/pitch.hpp"

namespace mpa::signal {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the same double.
std::string format_real(double v);
double parse_real(const std::string& token, const std::string& context);

void write_contour(std::ostream& os, const PitchContour& contour);
PitchContour read_contour(std::istream& is, const std::string& source = "<stream>");
void save_contour(const std::filesystem::path& file, const PitchContour& contour);
PitchContour load_contour(const std::filesystem::path& file);

void write_score(std::ostream& os, const Score& score);
Score read_score(std::istream& is, const std::string& source = "<stream>");
void save_score(const std::filesystem::path& file, const Score& score);
Score load_score(const std::filesystem::path& file);

}  // namespace mpa::signal
