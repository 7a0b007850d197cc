#include "powertrain/simdevice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "powertrain/error.hpp"

namespace powertrain::sim {

namespace {

struct Normalized {
  double n, c, g, m;
};

Normalized normalize(const PowerMode& mode, const DeviceGrid& grid) {
  return {static_cast<double>(mode.cores) / grid.max_cores,
          static_cast<double>(mode.cpu_mhz) / grid.cpu_freqs.back(),
          static_cast<double>(mode.gpu_mhz) / grid.gpu_freqs.back(),
          static_cast<double>(mode.mem_mhz) / grid.mem_freqs.back()};
}

}  // namespace

void SyntheticWorkload::validate() const {
  for (double v : {t_g, t_c, t_m, p_0, p_c, p_g, p_m}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DataError("workload '" + name + "': work terms and power coefficients must be finite and >= 0");
    }
  }
  if (!(t_g + t_c + t_m > 0.0)) throw DataError("workload '" + name + "': all work terms are zero");
  if (!(rho > 0.0 && rho <= 1.0)) throw DataError("workload '" + name + "': rho must be in (0, 1]");
}

void NoiseSpec::validate() const {
  if (!(time_sigma_rel >= 0.0) || !(power_sigma_rel >= 0.0)) throw DataError("noise sigmas must be >= 0");
  if (!(first_minibatch_factor >= 1.0)) throw DataError("first_minibatch_factor must be >= 1");
}

SyntheticWorkload resnet_like() { return {"resnet-like", 50.0, 5.0, 3.0, 0.5, 5000.0, 9000.0, 30000.0, 6000.0}; }

SyntheticWorkload mobilenet_like() {
  return {"mobilenet-like", 20.0, 4.0, 2.0, 0.6, 5000.0, 6000.0, 15000.0, 4000.0};
}

SyntheticWorkload bert_like() { return {"bert-like", 120.0, 4.0, 6.0, 0.4, 5000.0, 7000.0, 40000.0, 7000.0}; }

void to_json(nlohmann::json& j, const SyntheticWorkload& wl) {
  j = nlohmann::json{{"name", wl.name}, {"t_g_ms", wl.t_g}, {"t_c_ms", wl.t_c}, {"t_m_ms", wl.t_m},
                     {"rho", wl.rho},   {"p_0_mw", wl.p_0}, {"p_c_mw", wl.p_c}, {"p_g_mw", wl.p_g},
                     {"p_m_mw", wl.p_m}};
}

void from_json(const nlohmann::json& j, SyntheticWorkload& wl) {
  j.at("name").get_to(wl.name);
  j.at("t_g_ms").get_to(wl.t_g);
  j.at("t_c_ms").get_to(wl.t_c);
  j.at("t_m_ms").get_to(wl.t_m);
  j.at("rho").get_to(wl.rho);
  j.at("p_0_mw").get_to(wl.p_0);
  j.at("p_c_mw").get_to(wl.p_c);
  j.at("p_g_mw").get_to(wl.p_g);
  j.at("p_m_mw").get_to(wl.p_m);
}

SyntheticWorkload load_workload(const std::string& preset_or_path) {
  if (preset_or_path == "resnet-like" || preset_or_path == "resnet") return resnet_like();
  if (preset_or_path == "mobilenet-like" || preset_or_path == "mobilenet") return mobilenet_like();
  if (preset_or_path == "bert-like" || preset_or_path == "bert") return bert_like();
  std::ifstream in(preset_or_path);
  if (!in) throw DataError("unknown workload preset or unreadable file '" + preset_or_path + "'");
  SyntheticWorkload wl;
  try {
    wl = nlohmann::json::parse(in).get<SyntheticWorkload>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("workload file " + preset_or_path + ": " + e.what());
  }
  wl.validate();
  return wl;
}

void write_workload_file(const SyntheticWorkload& wl, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << nlohmann::json(wl).dump(2) << '\n';
}

double true_time(const PowerMode& mode, const SyntheticWorkload& wl, const DeviceGrid& grid) {
  const auto x = normalize(mode, grid);
  return wl.t_g / x.g + wl.t_c / (x.c * std::pow(x.n, wl.rho)) + wl.t_m / x.m;
}

double true_power(const PowerMode& mode, const SyntheticWorkload& wl, const DeviceGrid& grid) {
  const auto x = normalize(mode, grid);
  return wl.p_0 + wl.p_c * x.n * x.c * x.c + wl.p_g * x.g * x.g + wl.p_m * x.m;
}

Corpus truth_corpus(const DeviceGrid& grid, const PowerModeSpace& space, const SyntheticWorkload& wl) {
  Corpus corpus;
  corpus.workload = wl.name;
  corpus.device = grid.name;
  for (const auto& mode : space) {
    grid.check(mode);
    corpus.points[mode] = {mode, true_time(mode, wl, grid), true_power(mode, wl, grid), 1, 1};
  }
  return corpus;
}

RawTelemetry generate_corpus(const DeviceGrid& grid, const PowerModeSpace& space, const SyntheticWorkload& wl,
                             const NoiseSpec& noise, std::size_t minibatches) {
  grid.validate();
  wl.validate();
  noise.validate();
  if (minibatches < 1) throw DataError("generate_corpus: need at least one minibatch");
  RawTelemetry out;
  out.workload = wl.name;
  out.device = grid.name;
  for (const auto& mode : space) {
    grid.check(mode);
    const double t = true_time(mode, wl, grid);
    const double p = true_power(mode, wl, grid);
    std::mt19937_64 rng(mix_seed(noise.seed, mode_hash(mode)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    RawProfile profile;
    profile.mode = mode;
    double total_ms = 0.0;
    for (std::size_t i = 0; i < minibatches; ++i) {
      double v = noise.time_sigma_rel > 0.0 ? t * std::max(0.01, 1.0 + noise.time_sigma_rel * gauss(rng)) : t;
      if (i == 0) v *= noise.first_minibatch_factor;
      profile.minibatch_times_ms.push_back(v);
      total_ms += v;
    }
    for (std::size_t j = 0; j < noise.power_ramp_samples; ++j) {
      profile.power_samples_mw.push_back(
          p * (0.3 + 0.7 * static_cast<double>(j) / static_cast<double>(noise.power_ramp_samples)));
    }
    const auto stable = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(total_ms / 1000.0)));
    for (std::size_t j = 0; j < stable; ++j) {
      profile.power_samples_mw.push_back(
          noise.power_sigma_rel > 0.0 ? p * std::max(0.01, 1.0 + noise.power_sigma_rel * gauss(rng)) : p);
    }
    out.profiles.emplace(mode, std::move(profile));
  }
  return out;
}

SyntheticWorkload perturb_workload(const SyntheticWorkload& wl, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0 && magnitude <= 1.0)) throw DataError("perturbation magnitude must be in [0, 1]");
  SyntheticWorkload out = wl;
  if (magnitude == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(1.0 - magnitude, 1.0 + magnitude);
  for (double* v : {&out.t_g, &out.t_c, &out.t_m, &out.rho, &out.p_0, &out.p_c, &out.p_g, &out.p_m}) {
    *v *= factor(rng);
  }
  out.rho = std::min(out.rho, 1.0);
  out.name = wl.name + "-perturbed";
  return out;
}

}  // namespace powertrain::sim
