#pragma once

#include <span>
#include <vector>

namespace mpa::train {

// Coefficient of determination 1 - SS_res / SS_tot. Throws when n < 2, the
// lengths differ, or the truth has zero variance.
double r2(std::span<const double> prediction, std::span<const double> truth);

double mean_squared_error(std::span<const double> prediction, std::span<const double> truth);

// Boxplot summary with linearly interpolated quartiles.
struct Summary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Quantile q in [0, 1] of `values` with linear interpolation between order
// statistics (position q * (n - 1)).
double quantile(std::vector<double> values, double q);
Summary summarize(std::span<const double> values);

}  // namespace mpa::train
