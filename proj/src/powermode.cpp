#include "powertrain/powermode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "powertrain/error.hpp"

namespace powertrain {

namespace {

std::vector<int> evenly_spaced(int lo, int hi, int count) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
    out.push_back(static_cast<int>(std::lround(lo + t * (hi - lo))));
  }
  return out;
}

void validate_list(const std::string& grid, const char* dim, const std::vector<int>& freqs) {
  if (freqs.empty()) {
    throw DataError("grid '" + grid + "': " + dim + " list is empty");
  }
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (freqs[i] <= 0) {
      throw DataError("grid '" + grid + "': " + dim + " contains non-positive value " + std::to_string(freqs[i]));
    }
    if (i > 0 && freqs[i] <= freqs[i - 1]) {
      throw DataError("grid '" + grid + "': " + dim + " is not strictly ascending at index " + std::to_string(i));
    }
  }
}

bool has(const std::vector<int>& freqs, int value) {
  return std::binary_search(freqs.begin(), freqs.end(), value);
}

}  // namespace

std::string to_string(const PowerMode& mode) {
  return "(cores=" + std::to_string(mode.cores) + ", cpu=" + std::to_string(mode.cpu_mhz) +
         " MHz, gpu=" + std::to_string(mode.gpu_mhz) + " MHz, mem=" + std::to_string(mode.mem_mhz) + " MHz)";
}

void DeviceGrid::validate() const {
  validate_list(name, "cpu_freqs_mhz", cpu_freqs);
  validate_list(name, "gpu_freqs_mhz", gpu_freqs);
  validate_list(name, "mem_freqs_mhz", mem_freqs);
  if (max_cores < 1) {
    throw DataError("grid '" + name + "': max_cores must be >= 1");
  }
}

void DeviceGrid::check(const PowerMode& mode) const {
  if (mode.cores < 1 || mode.cores > max_cores) {
    throw DataError("cores=" + std::to_string(mode.cores) + " outside 1.." + std::to_string(max_cores) +
                    " for grid '" + name + "'");
  }
  if (!has(cpu_freqs, mode.cpu_mhz)) {
    throw DataError("cpu_mhz=" + std::to_string(mode.cpu_mhz) + " is not a CPU frequency of grid '" + name + "'");
  }
  if (!has(gpu_freqs, mode.gpu_mhz)) {
    throw DataError("gpu_mhz=" + std::to_string(mode.gpu_mhz) + " is not a GPU frequency of grid '" + name + "'");
  }
  if (!has(mem_freqs, mode.mem_mhz)) {
    throw DataError("mem_mhz=" + std::to_string(mode.mem_mhz) + " is not a memory frequency of grid '" + name +
                    "'");
  }
}

bool DeviceGrid::contains(const PowerMode& mode) const {
  return mode.cores >= 1 && mode.cores <= max_cores && has(cpu_freqs, mode.cpu_mhz) &&
         has(gpu_freqs, mode.gpu_mhz) && has(mem_freqs, mode.mem_mhz);
}

DeviceGrid orin_agx_grid() {
  return {"orin-agx", evenly_spaced(115, 2200, 29), evenly_spaced(40, 1300, 13), evenly_spaced(204, 3200, 4),
          12, true};
}

DeviceGrid xavier_agx_grid() {
  return {"xavier-agx", evenly_spaced(115, 2265, 29), evenly_spaced(40, 1377, 14), evenly_spaced(204, 2133, 9),
          8, true};
}

DeviceGrid orin_nano_grid() {
  return {"orin-nano", evenly_spaced(115, 1500, 20), evenly_spaced(40, 625, 5), evenly_spaced(204, 2133, 3), 6,
          true};
}

void to_json(nlohmann::json& j, const DeviceGrid& grid) {
  j = nlohmann::json{{"name", grid.name},
                     {"cpu_freqs_mhz", grid.cpu_freqs},
                     {"gpu_freqs_mhz", grid.gpu_freqs},
                     {"mem_freqs_mhz", grid.mem_freqs},
                     {"max_cores", grid.max_cores}};
  if (grid.synthetic) {
    j["synthetic"] = true;
  }
}

void from_json(const nlohmann::json& j, DeviceGrid& grid) {
  j.at("name").get_to(grid.name);
  j.at("cpu_freqs_mhz").get_to(grid.cpu_freqs);
  j.at("gpu_freqs_mhz").get_to(grid.gpu_freqs);
  j.at("mem_freqs_mhz").get_to(grid.mem_freqs);
  j.at("max_cores").get_to(grid.max_cores);
  grid.synthetic = j.value("synthetic", false);
}

DeviceGrid read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open grid file " + path.string());
  }
  DeviceGrid grid;
  try {
    grid = nlohmann::json::parse(in).get<DeviceGrid>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("grid file " + path.string() + ": " + e.what());
  }
  grid.validate();
  return grid;
}

void write_grid_file(const DeviceGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write grid file " + path.string());
  }
  out << nlohmann::json(grid).dump(2) << '\n';
}

DeviceGrid load_grid(const std::string& preset_or_path) {
  if (preset_or_path == "orin" || preset_or_path == "orin-agx") return orin_agx_grid();
  if (preset_or_path == "xavier" || preset_or_path == "xavier-agx") return xavier_agx_grid();
  if (preset_or_path == "nano" || preset_or_path == "orin-nano") return orin_nano_grid();
  return read_grid_file(preset_or_path);
}

PowerModeSpace enumerate_full(const DeviceGrid& grid) {
  grid.validate();
  PowerModeSpace modes;
  modes.reserve(grid.mode_count());
  for (int cores = 1; cores <= grid.max_cores; ++cores) {
    for (int cpu : grid.cpu_freqs) {
      for (int gpu : grid.gpu_freqs) {
        for (int mem : grid.mem_freqs) {
          modes.push_back({cores, cpu, gpu, mem});
        }
      }
    }
  }
  return modes;
}

PowerModeSpace subsample_profiling_grid(const DeviceGrid& grid) {
  grid.validate();
  if (grid.max_cores < 2) {
    throw DataError("grid '" + grid.name + "': profiling subsample needs max_cores >= 2");
  }
  // Drop up to two of the slowest CPU frequencies, always keeping at least one.
  const std::size_t dropped = std::min<std::size_t>(2, grid.cpu_freqs.size() - 1);
  std::vector<int> cpu_subset;
  for (std::size_t i = dropped; i < grid.cpu_freqs.size(); i += 2) {
    cpu_subset.push_back(grid.cpu_freqs[i]);
  }

  PowerModeSpace modes;
  for (int cores = 2; cores <= grid.max_cores; cores += 2) {
    for (int cpu : cpu_subset) {
      for (int gpu : grid.gpu_freqs) {
        for (int mem : grid.mem_freqs) {
          modes.push_back({cores, cpu, gpu, mem});
        }
      }
    }
  }
  return modes;
}

PowerModeSpace sample_random(const PowerModeSpace& space, std::size_t k, std::uint64_t seed) {
  if (k > space.size()) {
    throw DataError("cannot sample " + std::to_string(k) + " modes from a space of " +
                    std::to_string(space.size()));
  }
  PowerModeSpace shuffled = space;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  shuffled.resize(k);
  return shuffled;
}

PowerMode maxn(const DeviceGrid& grid) {
  grid.validate();
  return {grid.max_cores, grid.cpu_freqs.back(), grid.gpu_freqs.back(), grid.mem_freqs.back()};
}

std::uint64_t mode_hash(const PowerMode& mode) {
  std::uint64_t h = 0;
  for (int v : {mode.cores, mode.cpu_mhz, mode.gpu_mhz, mode.mem_mhz}) {
    h = mix_seed(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
  }
  return h;
}

}  // namespace powertrain
