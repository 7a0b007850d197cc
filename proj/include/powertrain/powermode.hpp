#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "powertrain/random.hpp"

namespace powertrain {

// One device configuration: active CPU cores plus CPU/GPU/memory frequencies
// in MHz. The defaulted ordering is the canonical one (cores, cpu, gpu, mem).
struct PowerMode {
  int cores = 1;
  int cpu_mhz = 0;
  int gpu_mhz = 0;
  int mem_mhz = 0;

  auto operator<=>(const PowerMode&) const = default;

  // Model input in feature order [cores, cpu_mhz, gpu_mhz, mem_mhz].
  std::array<double, 4> features() const {
    return {static_cast<double>(cores), static_cast<double>(cpu_mhz), static_cast<double>(gpu_mhz),
            static_cast<double>(mem_mhz)};
  }
};

std::string to_string(const PowerMode& mode);

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"cores", "cpu_mhz", "gpu_mhz",
                                                                         "mem_mhz"};

// Frequencies available on a device, each list strictly ascending.
struct DeviceGrid {
  std::string name;
  std::vector<int> cpu_freqs;
  std::vector<int> gpu_freqs;
  std::vector<int> mem_freqs;
  int max_cores = 1;
  // Preset grids whose exact frequency values are interpolated, not measured.
  bool synthetic = false;

  // Throws DataError when a list is empty, unsorted or non-positive.
  void validate() const;

  // Throws DataError naming the first dimension the mode falls outside of.
  void check(const PowerMode& mode) const;
  bool contains(const PowerMode& mode) const;

  std::size_t mode_count() const {
    return cpu_freqs.size() * gpu_freqs.size() * mem_freqs.size() * static_cast<std::size_t>(max_cores);
  }
};

// Preset grids with the published per-device cardinalities and maxima. The
// minima and intermediate steps are evenly spaced synthetic values.
DeviceGrid orin_agx_grid();
DeviceGrid xavier_agx_grid();
DeviceGrid orin_nano_grid();

// Accepts "orin", "xavier", "nano" or a path to a grid JSON file.
DeviceGrid load_grid(const std::string& preset_or_path);
DeviceGrid read_grid_file(const std::filesystem::path& path);
void write_grid_file(const DeviceGrid& grid, const std::filesystem::path& path);
void to_json(nlohmann::json& j, const DeviceGrid& grid);
void from_json(const nlohmann::json& j, DeviceGrid& grid);

using PowerModeSpace = std::vector<PowerMode>;

// Every mode of the grid in canonical order.
PowerModeSpace enumerate_full(const DeviceGrid& grid);

// Profiling subset: all GPU and memory frequencies, even core counts, and
// every other CPU frequency after dropping the two slowest.
PowerModeSpace subsample_profiling_grid(const DeviceGrid& grid);

// k distinct modes drawn uniformly without replacement; a pure function of
// (space, k, seed). Throws DataError if k > space.size().
PowerModeSpace sample_random(const PowerModeSpace& space, std::size_t k, std::uint64_t seed);

// All cores, every frequency at its maximum.
PowerMode maxn(const DeviceGrid& grid);

// Stable 64-bit mix of a mode, used to derive per-mode seeds.
std::uint64_t mode_hash(const PowerMode& mode);

}  // namespace powertrain
