#include "mpa/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpa::train {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
}

}  // namespace

double r2(std::span<const double> prediction, std::span<const double> truth) {
  check_pair(prediction, truth, "r2");
  if (truth.size() < 2) throw std::invalid_argument("r2 needs at least two samples");
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = truth[i] - prediction[i];
    const double t = truth[i] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2 undefined: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double mean_squared_error(std::span<const double> prediction, std::span<const double> truth) {
  check_pair(prediction, truth, "mse");
  if (truth.empty()) throw std::invalid_argument("mse of empty sequence");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = prediction[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(truth.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) throw std::invalid_argument("summary of empty sequence");
  return {*std::min_element(v.begin(), v.end()), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
          *std::max_element(v.begin(), v.end())};
}

}  // namespace mpa::train
