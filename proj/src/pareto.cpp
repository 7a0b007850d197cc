#include "powertrain/pareto.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "csv.hpp"
#include "powertrain/error.hpp"

namespace powertrain {

namespace {

constexpr const char* kFrontHeader = "cores,cpu_mhz,gpu_mhz,mem_mhz,time_ms,power_mw,source";
constexpr const char* kSweepHeader = "cores,cpu_mhz,gpu_mhz,mem_mhz,pred_time_ms,pred_power_mw";
constexpr const char* kCorpusHeader =
    "workload,device,cores,cpu_mhz,gpu_mhz,mem_mhz,time_ms,power_mw,n_time_entries,n_power_entries";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string to_string(PointSource s) { return s == PointSource::predicted ? "predicted" : "observed"; }

void ParetoFront::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.time_ms > 0.0) || !(p.power_mw > 0.0)) throw DataError("front point with non-positive metric");
    if (i > 0 && !(p.power_mw > points[i - 1].power_mw && p.time_ms < points[i - 1].time_ms)) {
      throw DataError("front is not sorted by power with strictly decreasing time at index " + std::to_string(i));
    }
  }
}

Budget Budget::parse(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  s = lower(s);
  double scale = 1.0;
  if (s.size() > 2 && s.ends_with("mw")) {
    s.resize(s.size() - 2);
  } else if (s.size() > 1 && s.ends_with("w")) {
    s.resize(s.size() - 1);
    scale = 1000.0;
  }
  double value = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError("cannot parse power budget '" + text + "' (expected e.g. 30W or 30000mW)");
  }
  Budget b{value * scale};
  if (!(b.power_limit_mw > 0.0) || !std::isfinite(b.power_limit_mw)) {
    throw DataError("power budget must be positive");
  }
  return b;
}

ParetoFront build_front(std::vector<TradeoffPoint> points) {
  if (points.empty()) throw DataError("cannot build a Pareto front from zero points");
  for (const auto& p : points) {
    if (!(p.time_ms > 0.0) || !(p.power_mw > 0.0)) {
      throw DataError("non-positive time or power for mode " + to_string(p.mode));
    }
  }
  std::sort(points.begin(), points.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.power_mw != b.power_mw) return a.power_mw < b.power_mw;
    if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
    return a.mode < b.mode;
  });
  ParetoFront front;
  double best_time = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    if (p.time_ms < best_time) {
      front.points.push_back(p);
      best_time = p.time_ms;
    } else if (!front.points.empty() && p.time_ms == front.points.back().time_ms &&
               p.power_mw == front.points.back().power_mw) {
      front.alternates[front.points.back().mode].push_back(p.mode);
    }
  }
  return front;
}

const TradeoffPoint& optimize(const ParetoFront& front, const Budget& budget) {
  if (front.points.empty()) throw DataError("optimize: empty front");
  auto it = std::upper_bound(front.points.begin(), front.points.end(), budget.power_limit_mw,
                             [](double limit, const TradeoffPoint& p) { return limit < p.power_mw; });
  if (it == front.points.begin()) {
    throw InfeasibleError("no power mode fits a budget of " + csv::number(budget.power_limit_mw) +
                          " mW; the lowest-power mode draws " + csv::number(front.points.front().power_mw) + " mW");
  }
  return *std::prev(it);
}

double epoch_time(double time_ms, const EpochSpec& spec) {
  if (spec.dataset_samples < 1 || spec.minibatch_size < 1) throw DataError("epoch spec counts must be >= 1");
  const long minibatches = (spec.dataset_samples + spec.minibatch_size - 1) / spec.minibatch_size;
  return time_ms * static_cast<double>(minibatches) / 1000.0;
}

double energy_mwh(double power_mw, double duration_h) { return power_mw * duration_h; }

std::vector<TradeoffPoint> observed_points(const Corpus& corpus) {
  std::vector<TradeoffPoint> out;
  out.reserve(corpus.size());
  for (const auto& [mode, p] : corpus.points) out.push_back({mode, p.time_ms, p.power_mw, PointSource::observed});
  return out;
}

void write_front_csv(const ParetoFront& front, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << kFrontHeader << '\n';
  for (const auto& p : front.points) {
    out << p.mode.cores << ',' << p.mode.cpu_mhz << ',' << p.mode.gpu_mhz << ',' << p.mode.mem_mhz << ','
        << csv::number(p.time_ms) << ',' << csv::number(p.power_mw) << ',' << to_string(p.source) << '\n';
  }
}

std::vector<TradeoffPoint> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
  const std::string header(csv::strip_cr(line));
  std::size_t offset = 0, fields = 0;
  if (header == kFrontHeader) {
    fields = 7;
  } else if (header == kSweepHeader) {
    fields = 6;
  } else if (header == kCorpusHeader) {
    offset = 2;
    fields = 10;
  } else {
    throw ParseError(src, 1, "unrecognized header; expected a front, sweep or corpus export");
  }
  std::vector<TradeoffPoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::strip_cr(line);
    if (text.empty()) continue;
    const auto f = csv::split(text);
    if (f.size() != fields) {
      throw ParseError(src, line_no, "expected " + std::to_string(fields) + " fields, found " + std::to_string(f.size()));
    }
    TradeoffPoint p;
    p.mode = {csv::parse_field<int>(f[offset], src, line_no, "cores"),
              csv::parse_field<int>(f[offset + 1], src, line_no, "cpu_mhz"),
              csv::parse_field<int>(f[offset + 2], src, line_no, "gpu_mhz"),
              csv::parse_field<int>(f[offset + 3], src, line_no, "mem_mhz")};
    p.time_ms = csv::parse_field<double>(f[offset + 4], src, line_no, "time_ms");
    p.power_mw = csv::parse_field<double>(f[offset + 5], src, line_no, "power_mw");
    if (fields == 6) {
      p.source = PointSource::predicted;
    } else if (fields == 7) {
      if (f[6] == "predicted") {
        p.source = PointSource::predicted;
      } else if (f[6] == "observed") {
        p.source = PointSource::observed;
      } else {
        throw ParseError(src, line_no, "source must be predicted or observed");
      }
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace powertrain
