#pragma once

#include <span>
#include <vector>

namespace powertrain {

// 100 * mean(|p - a| / |a|). Throws DataError on length mismatch, empty
// input or a zero actual.
double mape(std::span<const double> predictions, std::span<const double> actuals);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear interpolation between order statistics. Throws DataError on empty
// input.
Quartiles quartiles(std::vector<double> values);

}  // namespace powertrain
