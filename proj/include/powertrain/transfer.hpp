#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "powertrain/metrics.hpp"
#include "powertrain/predictor.hpp"

namespace powertrain {

enum class FineTuneScope { all_layers, head_only };

std::string to_string(FineTuneScope s);
FineTuneScope parse_scope(const std::string& s);

struct TransferConfig {
  std::size_t sample_count = 50;
  int fine_tune_epochs = 100;
  double learning_rate = 0.001;
  nn::LossKind loss = nn::LossKind::mse;
  FineTuneScope scope = FineTuneScope::all_layers;
  std::uint64_t seed = 0;
  // Remaining training knobs (minibatch size, dropout, Adam) come from here.
  nn::TrainConfig base;

  void validate() const;
  nn::TrainConfig train_config(std::size_t layer_count) const;
};

// Replaces the output layer of each reference model with a fresh one, refits
// both standardizers on the sample and fine-tunes on its balanced rows.
WorkloadModels retarget(const WorkloadModels& reference, const Corpus& sample, const TransferConfig& config);

struct TransferTrial {
  std::size_t k = 0;
  int trial = 0;
  double time_mape = 0.0;
  double power_mape = 0.0;
};

struct TransferSummary {
  std::size_t k = 0;
  Quartiles time_mape;
  Quartiles power_mape;
};

struct TransferReport {
  std::vector<TransferTrial> trials;
  std::vector<TransferSummary> summary;
};

// For each k and trial: sample k modes (seed derived from config.seed, k and
// the trial), retarget, and score on every remaining mode of target.
TransferReport transfer_report(const WorkloadModels& reference, const Corpus& target,
                               const std::vector<std::size_t>& k_values, int trials, const TransferConfig& config);

std::uint64_t trial_seed(std::uint64_t seed, std::size_t k, int trial);

void write_transfer_report(const TransferReport& report, const std::filesystem::path& trials_csv,
                           const std::filesystem::path& summary_csv);

}  // namespace powertrain
