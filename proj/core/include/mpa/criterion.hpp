#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpa {

// Assessment criteria modeled by separate regressors. Tone quality is not
// derivable from pitch contours and is not represented.
enum class Criterion { musicality, note_accuracy, rhythmic_accuracy };

inline constexpr std::array<Criterion, 3> kAllCriteria = {
    Criterion::musicality, Criterion::note_accuracy, Criterion::rhythmic_accuracy};

inline std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::musicality: return "musicality";
    case Criterion::note_accuracy: return "note_accuracy";
    case Criterion::rhythmic_accuracy: return "rhythmic_accuracy";
  }
  return "unknown";
}

inline Criterion parse_criterion(std::string_view s) {
  for (auto c : kAllCriteria) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown criterion '" + std::string(s) +
                              "' (expected musicality, note_accuracy or rhythmic_accuracy)");
}

}  // namespace mpa
