#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "powertrain/powermode.hpp"

namespace powertrain {

// Raw profiling trace of one power mode: per-minibatch training times and
// power samples taken one second apart, both in index order.
struct RawProfile {
  PowerMode mode;
  std::vector<double> minibatch_times_ms;
  std::vector<double> power_samples_mw;
};

struct RawTelemetry {
  std::string workload;
  std::string device;
  std::map<PowerMode, RawProfile> profiles;
};

struct CleanOptions {
  std::size_t window = 3;
  double epsilon_rel = 0.05;
  bool drop_first_minibatch = true;
  // Profiles left with fewer time entries than this are kept with a warning.
  std::size_t min_time_entries = 10;
};

struct CleanProfile {
  PowerMode mode;
  std::vector<double> minibatch_times_ms;
  std::vector<double> power_samples_mw;
  std::size_t stabilization_index = 0;
};

// Ground truth for one mode: median minibatch time and mean power.
struct ProfiledPoint {
  PowerMode mode;
  double time_ms = 0.0;
  double power_mw = 0.0;
  std::size_t n_time_entries = 0;
  std::size_t n_power_entries = 0;
};

enum class Target { time, power };

std::string to_string(Target t);
Target parse_target(const std::string& s);

struct Corpus {
  std::string workload;
  std::string device;
  std::map<PowerMode, ProfiledPoint> points;
  // Present when built from raw telemetry; needed for per-entry training.
  std::map<PowerMode, CleanProfile> clean_profiles;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_entries() const { return !clean_profiles.empty(); }
  PowerModeSpace modes() const;
  bool contains(const PowerMode& mode) const { return points.count(mode) != 0; }
  // Throws DataError when the mode was not profiled.
  const ProfiledPoint& at(const PowerMode& mode) const;
  // Restriction to the given modes; throws DataError on unknown modes.
  Corpus subset(const PowerModeSpace& modes) const;
};

// Reads minibatches.csv and power.csv; rows are grouped by their four mode
// columns. Throws ParseError (with line number) or DataError.
RawTelemetry parse_corpus(const std::filesystem::path& minibatch_file, const std::filesystem::path& power_file);
void write_telemetry(const RawTelemetry& telemetry, const std::filesystem::path& minibatch_file,
                     const std::filesystem::path& power_file);

// Drops the first minibatch entry and the power samples recorded before the
// trace settles: the first index i whose window [i, i + window) has
// max - min <= epsilon_rel * window mean. Throws StabilizationError when no
// window qualifies.
CleanProfile clean_profile(const RawProfile& raw, const CleanOptions& options = {});

ProfiledPoint aggregate(const CleanProfile& clean);

struct IngestResult {
  Corpus corpus;
  std::vector<std::string> warnings;
  std::vector<PowerMode> rejected;
};

// Cleans and aggregates every profile. Rejected profiles are reported and
// left out of the corpus.
IngestResult build_corpus(const RawTelemetry& telemetry, const CleanOptions& options = {});

struct TrainingRows {
  std::vector<std::array<double, kFeatureCount>> features;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
};

// One row per cleaned entry. With balance, every mode is raised to the
// largest per-mode entry count by cycling through its own entries. Corpora
// without entries (aggregate imports) yield one row per mode.
TrainingRows training_rows(const Corpus& corpus, Target target, bool balance);

void write_corpus_csv(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus_csv(const std::filesystem::path& path);

}  // namespace powertrain
