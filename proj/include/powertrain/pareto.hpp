#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "powertrain/powermode.hpp"
#include "powertrain/telemetry.hpp"

namespace powertrain {

enum class PointSource { predicted, observed };

std::string to_string(PointSource s);

struct TradeoffPoint {
  PowerMode mode;
  double time_ms = 0.0;   // per minibatch
  double power_mw = 0.0;
  PointSource source = PointSource::observed;
};

// Non-dominated points, power ascending and time strictly descending.
struct ParetoFront {
  std::vector<TradeoffPoint> points;
  // Modes with the same (time, power) as a front member, keyed by the member.
  std::map<PowerMode, std::vector<PowerMode>> alternates;

  std::size_t size() const { return points.size(); }
  // Throws DataError if ordering or positivity is violated.
  void validate() const;
};

struct Budget {
  double power_limit_mw = 0.0;

  // "30W", "30.5 W", "30000mW" or a bare number of mW.
  static Budget parse(const std::string& text);
};

struct EpochSpec {
  long dataset_samples = 1;
  long minibatch_size = 16;
};

// Throws DataError on an empty input or non-positive metrics.
ParetoFront build_front(std::vector<TradeoffPoint> points);

// Front point with the largest power not above the budget (boundary
// inclusive). Throws InfeasibleError when every point exceeds it.
const TradeoffPoint& optimize(const ParetoFront& front, const Budget& budget);

// Seconds per epoch.
double epoch_time(double time_ms, const EpochSpec& spec);
double energy_mwh(double power_mw, double duration_h);

std::vector<TradeoffPoint> observed_points(const Corpus& corpus);

void write_front_csv(const ParetoFront& front, const std::filesystem::path& path);
// Reads front, sweep or corpus CSV exports, recognized by their header.
std::vector<TradeoffPoint> read_points_csv(const std::filesystem::path& path);

}  // namespace powertrain
