#include "powertrain/telemetry.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>

#include "csv.hpp"
#include "powertrain/error.hpp"
#include "powertrain/log.hpp"

namespace powertrain {

namespace {

constexpr const char* kMinibatchHeader = "workload,device,cores,cpu_mhz,gpu_mhz,mem_mhz,minibatch_index,time_ms";
constexpr const char* kPowerHeader = "workload,device,cores,cpu_mhz,gpu_mhz,mem_mhz,sample_index,power_mw";
constexpr const char* kCorpusHeader =
    "workload,device,cores,cpu_mhz,gpu_mhz,mem_mhz,time_ms,power_mw,n_time_entries,n_power_entries";

struct Series {
  std::optional<std::string> workload;
  std::optional<std::string> device;
  std::map<PowerMode, std::vector<std::pair<long, double>>> values;
};

PowerMode parse_mode(const std::vector<std::string_view>& f, const std::string& src, std::size_t line) {
  return {csv::parse_field<int>(f[2], src, line, "cores"), csv::parse_field<int>(f[3], src, line, "cpu_mhz"),
          csv::parse_field<int>(f[4], src, line, "gpu_mhz"), csv::parse_field<int>(f[5], src, line, "mem_mhz")};
}

void check_identity(std::optional<std::string>& slot, std::string_view value, const char* what,
                    const std::string& src, std::size_t line) {
  if (!slot) {
    slot = std::string(value);
  } else if (*slot != value) {
    throw DataError(src + ":" + std::to_string(line) + ": mixed " + what + " identifiers ('" + *slot + "' and '" +
                    std::string(value) + "') in one file");
  }
}

Series read_series(const std::filesystem::path& path, const char* header, const char* index_name,
                   const char* value_name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string src = path.string();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
  ++line_no;
  if (csv::strip_cr(line) != header) {
    throw ParseError(src, line_no, std::string("unexpected header, expected '") + header + "'");
  }
  Series series;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::strip_cr(line);
    if (text.empty()) continue;
    const auto f = csv::split(text);
    if (f.size() != 8) {
      throw ParseError(src, line_no, "expected 8 fields, found " + std::to_string(f.size()));
    }
    check_identity(series.workload, f[0], "workload", src, line_no);
    check_identity(series.device, f[1], "device", src, line_no);
    const PowerMode mode = parse_mode(f, src, line_no);
    const auto index = csv::parse_field<long>(f[6], src, line_no, index_name);
    const auto value = csv::parse_field<double>(f[7], src, line_no, value_name);
    if (!(value > 0.0)) throw ParseError(src, line_no, std::string(value_name) + " must be positive");
    series.values[mode].emplace_back(index, value);
  }
  return series;
}

std::vector<double> ordered_values(std::vector<std::pair<long, double>> entries, const std::string& src,
                                   const PowerMode& mode, const char* index_name) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != static_cast<long>(i)) {
      throw DataError(src + ": " + index_name + " values for mode " + to_string(mode) +
                      " are not contiguous from 0");
    }
    out.push_back(entries[i].second);
  }
  return out;
}

void write_mode_prefix(std::ostream& out, const std::string& workload, const std::string& device,
                       const PowerMode& m) {
  out << workload << ',' << device << ',' << m.cores << ',' << m.cpu_mhz << ',' << m.gpu_mhz << ',' << m.mem_mhz;
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

std::string to_string(Target t) { return t == Target::time ? "time" : "power"; }

Target parse_target(const std::string& s) {
  if (s == "time") return Target::time;
  if (s == "power") return Target::power;
  throw DataError("unknown target '" + s + "' (expected time or power)");
}

PowerModeSpace Corpus::modes() const {
  PowerModeSpace out;
  out.reserve(points.size());
  for (const auto& [mode, point] : points) out.push_back(mode);
  return out;
}

const ProfiledPoint& Corpus::at(const PowerMode& mode) const {
  auto it = points.find(mode);
  if (it == points.end()) {
    throw DataError("mode " + to_string(mode) + " is not covered by corpus '" + workload + "'");
  }
  return it->second;
}

Corpus Corpus::subset(const PowerModeSpace& modes) const {
  Corpus out;
  out.workload = workload;
  out.device = device;
  for (const auto& mode : modes) {
    out.points.emplace(mode, at(mode));
    if (auto it = clean_profiles.find(mode); it != clean_profiles.end()) out.clean_profiles.emplace(mode, it->second);
  }
  return out;
}

RawTelemetry parse_corpus(const std::filesystem::path& minibatch_file, const std::filesystem::path& power_file) {
  Series times = read_series(minibatch_file, kMinibatchHeader, "minibatch_index", "time_ms");
  Series power = read_series(power_file, kPowerHeader, "sample_index", "power_mw");

  RawTelemetry out;
  out.workload = times.workload.value_or(power.workload.value_or(""));
  out.device = times.device.value_or(power.device.value_or(""));
  if ((power.workload && *power.workload != out.workload) || (power.device && *power.device != out.device)) {
    throw DataError("minibatch and power files disagree on workload/device identifiers");
  }
  for (auto& [mode, entries] : times.values) {
    auto& profile = out.profiles[mode];
    profile.mode = mode;
    profile.minibatch_times_ms = ordered_values(std::move(entries), minibatch_file.string(), mode, "minibatch_index");
  }
  for (auto& [mode, entries] : power.values) {
    auto& profile = out.profiles[mode];
    profile.mode = mode;
    profile.power_samples_mw = ordered_values(std::move(entries), power_file.string(), mode, "sample_index");
  }
  return out;
}

void write_telemetry(const RawTelemetry& telemetry, const std::filesystem::path& minibatch_file,
                     const std::filesystem::path& power_file) {
  std::ofstream mb(minibatch_file, std::ios::binary);
  std::ofstream pw(power_file, std::ios::binary);
  if (!mb || !pw) throw DataError("cannot write telemetry files");
  mb << kMinibatchHeader << '\n';
  pw << kPowerHeader << '\n';
  for (const auto& [mode, profile] : telemetry.profiles) {
    for (std::size_t i = 0; i < profile.minibatch_times_ms.size(); ++i) {
      write_mode_prefix(mb, telemetry.workload, telemetry.device, mode);
      mb << ',' << i << ',' << csv::number(profile.minibatch_times_ms[i]) << '\n';
    }
    for (std::size_t i = 0; i < profile.power_samples_mw.size(); ++i) {
      write_mode_prefix(pw, telemetry.workload, telemetry.device, mode);
      pw << ',' << i << ',' << csv::number(profile.power_samples_mw[i]) << '\n';
    }
  }
}

CleanProfile clean_profile(const RawProfile& raw, const CleanOptions& options) {
  const std::size_t dropped = options.drop_first_minibatch ? 1 : 0;
  if (raw.minibatch_times_ms.size() < dropped + 1) {
    throw DataError("mode " + to_string(raw.mode) + ": too few minibatch entries (" +
                    std::to_string(raw.minibatch_times_ms.size()) + ")");
  }
  if (options.window == 0) throw DataError("stabilization window must be positive");
  const auto& power = raw.power_samples_mw;
  if (power.size() < options.window) {
    throw DataError("mode " + to_string(raw.mode) + ": " + std::to_string(power.size()) +
                    " power samples, fewer than the stabilization window");
  }

  std::optional<std::size_t> stable;
  for (std::size_t i = 0; i + options.window <= power.size(); ++i) {
    const auto first = power.begin() + static_cast<std::ptrdiff_t>(i);
    const auto last = first + static_cast<std::ptrdiff_t>(options.window);
    const auto [lo, hi] = std::minmax_element(first, last);
    const double mean = std::accumulate(first, last, 0.0) / static_cast<double>(options.window);
    if (*hi - *lo <= options.epsilon_rel * mean) {
      stable = i;
      break;
    }
  }
  if (!stable) {
    throw StabilizationError("mode " + to_string(raw.mode) + ": power never stabilizes within " +
                             std::to_string(options.epsilon_rel * 100.0) + "% over a window of " +
                             std::to_string(options.window));
  }

  CleanProfile clean;
  clean.mode = raw.mode;
  clean.minibatch_times_ms.assign(raw.minibatch_times_ms.begin() + static_cast<std::ptrdiff_t>(dropped),
                                  raw.minibatch_times_ms.end());
  clean.power_samples_mw.assign(power.begin() + static_cast<std::ptrdiff_t>(*stable), power.end());
  clean.stabilization_index = *stable;
  return clean;
}

ProfiledPoint aggregate(const CleanProfile& clean) {
  if (clean.minibatch_times_ms.empty() || clean.power_samples_mw.empty()) {
    throw DataError("mode " + to_string(clean.mode) + ": cannot aggregate an empty profile");
  }
  ProfiledPoint p;
  p.mode = clean.mode;
  p.time_ms = median(clean.minibatch_times_ms);
  p.power_mw = std::accumulate(clean.power_samples_mw.begin(), clean.power_samples_mw.end(), 0.0) /
               static_cast<double>(clean.power_samples_mw.size());
  p.n_time_entries = clean.minibatch_times_ms.size();
  p.n_power_entries = clean.power_samples_mw.size();
  return p;
}

IngestResult build_corpus(const RawTelemetry& telemetry, const CleanOptions& options) {
  IngestResult result;
  result.corpus.workload = telemetry.workload;
  result.corpus.device = telemetry.device;
  for (const auto& [mode, raw] : telemetry.profiles) {
    try {
      CleanProfile clean = clean_profile(raw, options);
      if (clean.minibatch_times_ms.size() < options.min_time_entries) {
        result.warnings.push_back("mode " + to_string(mode) + ": only " +
                                  std::to_string(clean.minibatch_times_ms.size()) + " clean minibatch entries");
      }
      result.corpus.points.emplace(mode, aggregate(clean));
      result.corpus.clean_profiles.emplace(mode, std::move(clean));
    } catch (const DataError& e) {
      result.rejected.push_back(mode);
      result.warnings.push_back(std::string("rejected ") + e.what());
    }
  }
  return result;
}

TrainingRows training_rows(const Corpus& corpus, Target target, bool balance) {
  TrainingRows rows;
  if (!corpus.has_entries()) {
    for (const auto& [mode, point] : corpus.points) {
      rows.features.push_back(mode.features());
      rows.targets.push_back(target == Target::time ? point.time_ms : point.power_mw);
    }
    return rows;
  }
  auto entries_of = [target](const CleanProfile& p) -> const std::vector<double>& {
    return target == Target::time ? p.minibatch_times_ms : p.power_samples_mw;
  };
  std::size_t max_count = 0;
  for (const auto& [mode, profile] : corpus.clean_profiles) max_count = std::max(max_count, entries_of(profile).size());
  for (const auto& [mode, profile] : corpus.clean_profiles) {
    const auto& entries = entries_of(profile);
    if (entries.empty()) continue;
    const std::size_t count = balance ? max_count : entries.size();
    const auto features = mode.features();
    for (std::size_t i = 0; i < count; ++i) {
      rows.features.push_back(features);
      rows.targets.push_back(entries[i % entries.size()]);
    }
  }
  return rows;
}

void write_corpus_csv(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << kCorpusHeader << '\n';
  for (const auto& [mode, p] : corpus.points) {
    write_mode_prefix(out, corpus.workload, corpus.device, mode);
    out << ',' << csv::number(p.time_ms) << ',' << csv::number(p.power_mw) << ',' << p.n_time_entries << ','
        << p.n_power_entries << '\n';
  }
}

Corpus read_corpus_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
  if (csv::strip_cr(line) != kCorpusHeader) {
    throw ParseError(src, 1, std::string("unexpected header, expected '") + kCorpusHeader + "'");
  }
  Corpus corpus;
  std::optional<std::string> workload, device;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::strip_cr(line);
    if (text.empty()) continue;
    const auto f = csv::split(text);
    if (f.size() != 10) throw ParseError(src, line_no, "expected 10 fields, found " + std::to_string(f.size()));
    check_identity(workload, f[0], "workload", src, line_no);
    check_identity(device, f[1], "device", src, line_no);
    ProfiledPoint p;
    p.mode = parse_mode(f, src, line_no);
    p.time_ms = csv::parse_field<double>(f[6], src, line_no, "time_ms");
    p.power_mw = csv::parse_field<double>(f[7], src, line_no, "power_mw");
    p.n_time_entries = csv::parse_field<std::size_t>(f[8], src, line_no, "n_time_entries");
    p.n_power_entries = csv::parse_field<std::size_t>(f[9], src, line_no, "n_power_entries");
    if (!(p.time_ms > 0.0) || !(p.power_mw > 0.0)) {
      throw ParseError(src, line_no, "time_ms and power_mw must be positive");
    }
    if (!corpus.points.emplace(p.mode, p).second) {
      throw ParseError(src, line_no, "duplicate mode " + to_string(p.mode));
    }
  }
  corpus.workload = workload.value_or("");
  corpus.device = device.value_or("");
  return corpus;
}

}  // namespace powertrain
