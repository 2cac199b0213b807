#pragma once

#include <vector>

namespace eaps {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of `values`, which
/// need not be sorted. Throws std::invalid_argument on an empty input or p
/// outside [0, 1].
double quantile(std::vector<double> values, double p);
double quantile_sorted(const std::vector<double>& sorted, double p);

double mean(const std::vector<double>& values);
/// Population standard deviation (divides by n).
double stddev(const std::vector<double>& values);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

}  // namespace eaps
