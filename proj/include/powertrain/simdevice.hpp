#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "powertrain/powermode.hpp"
#include "powertrain/telemetry.hpp"

// Synthetic device used as ground truth: closed-form time and power surfaces
// over normalized frequencies and core counts.
namespace powertrain::sim {

struct SyntheticWorkload {
  std::string name;
  // Work terms in ms at maximum frequency.
  double t_g = 0.0;
  double t_c = 0.0;
  double t_m = 0.0;
  double rho = 1.0;  // core scaling exponent, (0, 1]
  // Power coefficients in mW.
  double p_0 = 0.0;
  double p_c = 0.0;
  double p_g = 0.0;
  double p_m = 0.0;

  void validate() const;
};

struct NoiseSpec {
  double time_sigma_rel = 0.01;
  double power_sigma_rel = 0.02;
  double first_minibatch_factor = 5.0;
  std::size_t power_ramp_samples = 3;
  std::uint64_t seed = 0;

  void validate() const;
  static NoiseSpec none(std::uint64_t seed = 0) { return {0.0, 0.0, 1.0, 0, seed}; }
};

SyntheticWorkload resnet_like();
SyntheticWorkload mobilenet_like();
SyntheticWorkload bert_like();

// "resnet-like", "mobilenet-like", "bert-like" or a workload JSON file.
SyntheticWorkload load_workload(const std::string& preset_or_path);
void write_workload_file(const SyntheticWorkload& wl, const std::filesystem::path& path);
void to_json(nlohmann::json& j, const SyntheticWorkload& wl);
void from_json(const nlohmann::json& j, SyntheticWorkload& wl);

// time = T_g/g + T_c/(c * n^rho) + T_m/m with every dimension normalized by
// its grid maximum.
double true_time(const PowerMode& mode, const SyntheticWorkload& wl, const DeviceGrid& grid);
// power = P_0 + P_c*n*c^2 + P_g*g^2 + P_m*m
double true_power(const PowerMode& mode, const SyntheticWorkload& wl, const DeviceGrid& grid);

// Exact surface values as a corpus without per-entry profiles.
Corpus truth_corpus(const DeviceGrid& grid, const PowerModeSpace& space, const SyntheticWorkload& wl);

// Raw profiles per mode. Power is sampled once per simulated second of
// training (at least 3 samples after the ramp). Each mode draws from its own
// stream, so the output does not depend on the order of space.
RawTelemetry generate_corpus(const DeviceGrid& grid, const PowerModeSpace& space, const SyntheticWorkload& wl,
                             const NoiseSpec& noise, std::size_t minibatches = 40);

// Scales every parameter by an independent uniform factor in
// [1 - magnitude, 1 + magnitude]. rho is capped at 1.
SyntheticWorkload perturb_workload(const SyntheticWorkload& wl, double magnitude, std::uint64_t seed);

}  // namespace powertrain::sim
