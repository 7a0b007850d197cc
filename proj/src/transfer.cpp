#include "powertrain/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "powertrain/error.hpp"

namespace powertrain {

std::string to_string(FineTuneScope s) { return s == FineTuneScope::all_layers ? "all_layers" : "head_only"; }

FineTuneScope parse_scope(const std::string& s) {
  if (s == "all_layers" || s == "all") return FineTuneScope::all_layers;
  if (s == "head_only" || s == "head") return FineTuneScope::head_only;
  throw DataError("unknown fine-tune scope '" + s + "' (expected all_layers or head_only)");
}

void TransferConfig::validate() const {
  if (sample_count < 2) throw DataError("transfer sample_count must be >= 2");
  if (fine_tune_epochs < 0) throw DataError("fine_tune_epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw DataError("transfer learning_rate must be positive");
  base.validate();
}

nn::TrainConfig TransferConfig::train_config(std::size_t layer_count) const {
  nn::TrainConfig cfg = base;
  cfg.learning_rate = learning_rate;
  cfg.epochs = fine_tune_epochs;
  cfg.loss = loss;
  cfg.seed = seed;
  cfg.first_trainable_layer = scope == FineTuneScope::head_only && layer_count > 0 ? layer_count - 1 : 0;
  return cfg;
}

WorkloadModels retarget(const WorkloadModels& reference, const Corpus& sample, const TransferConfig& config) {
  config.validate();
  if (sample.size() < config.sample_count) {
    throw DataError("transfer sample has " + std::to_string(sample.size()) + " modes, " +
                    std::to_string(config.sample_count) + " required");
  }
  WorkloadModels out;
  for (Target t : {Target::time, Target::power}) {
    const PredictionModel& ref = reference.model(t);
    if (ref.network.input_width() != static_cast<Eigen::Index>(kFeatureCount) ||
        ref.input_standardizer.width() != kFeatureCount) {
      throw DimensionError("reference " + to_string(t) + " model takes " +
                           std::to_string(ref.network.input_width()) + " features, sample modes have " +
                           std::to_string(kFeatureCount));
    }
    ref.network.validate();
    PreparedRows rows = prepare_rows(sample, t, ref.input_standardizer.kind);

    nn::Network start = ref.network;
    nn::Rng rng(mix_seed(config.seed, t == Target::time ? 0x71 : 0x72));
    nn::glorot_init(start.layers.back(), rng);

    const nn::TrainConfig cfg = config.train_config(start.layers.size());
    auto result = nn::fit(std::move(start), rows.x, rows.y, cfg, rows.target_scale);

    PredictionModel& m = out.model(t);
    m.kind = t;
    m.network = std::move(result.network);
    m.input_standardizer = std::move(rows.input_standardizer);
    m.target_scale = rows.target_scale;
    m.metadata.workload = sample.workload;
    m.metadata.device = sample.device;
    m.metadata.seed = config.seed;
    m.metadata.learning_rate = config.learning_rate;
    m.metadata.epochs = config.fine_tune_epochs;
    m.metadata.loss = config.loss;
    m.metadata.n_rows = static_cast<std::size_t>(rows.y.size());
    m.metadata.provenance = Provenance::transferred;
    m.metadata.reference_hash = content_hash(ref);
    m.metadata.fine_tune_scope = to_string(config.scope);
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t k, int trial) {
  return mix_seed(mix_seed(seed, k), static_cast<std::uint64_t>(trial));
}

TransferReport transfer_report(const WorkloadModels& reference, const Corpus& target,
                               const std::vector<std::size_t>& k_values, int trials, const TransferConfig& config) {
  if (trials < 1) throw DataError("transfer_report needs at least one trial");
  if (k_values.empty()) throw DataError("transfer_report needs at least one k");
  const PowerModeSpace all = target.modes();
  TransferReport report;
  for (std::size_t k : k_values) {
    if (k < 2 || k >= all.size()) {
      throw DataError("k=" + std::to_string(k) + " leaves no held-out modes in a corpus of " +
                      std::to_string(all.size()));
    }
    std::vector<double> time_mapes, power_mapes;
    for (int trial = 0; trial < trials; ++trial) {
      TransferConfig cfg = config;
      cfg.sample_count = k;
      cfg.seed = trial_seed(config.seed, k, trial);
      PowerModeSpace chosen = sample_random(all, k, cfg.seed);
      std::sort(chosen.begin(), chosen.end());
      PowerModeSpace held_out;
      std::set_difference(all.begin(), all.end(), chosen.begin(), chosen.end(), std::back_inserter(held_out));
      const WorkloadModels models = retarget(reference, target.subset(chosen), cfg);
      TransferTrial row{k, trial, model_mape(models.time, target, held_out),
                        model_mape(models.power, target, held_out)};
      time_mapes.push_back(row.time_mape);
      power_mapes.push_back(row.power_mape);
      report.trials.push_back(row);
    }
    report.summary.push_back({k, quartiles(time_mapes), quartiles(power_mapes)});
  }
  return report;
}

void write_transfer_report(const TransferReport& report, const std::filesystem::path& trials_csv,
                           const std::filesystem::path& summary_csv) {
  std::ofstream t(trials_csv, std::ios::binary);
  if (!t) throw DataError("cannot write " + trials_csv.string());
  t << "k,trial,time_mape,power_mape\n";
  for (const auto& r : report.trials) {
    t << r.k << ',' << r.trial << ',' << csv::number(r.time_mape) << ',' << csv::number(r.power_mape) << '\n';
  }
  std::ofstream s(summary_csv, std::ios::binary);
  if (!s) throw DataError("cannot write " + summary_csv.string());
  s << "k,time_mape_median,time_mape_q1,time_mape_q3,power_mape_median,power_mape_q1,power_mape_q3\n";
  for (const auto& r : report.summary) {
    s << r.k << ',' << csv::number(r.time_mape.median) << ',' << csv::number(r.time_mape.q1) << ','
      << csv::number(r.time_mape.q3) << ',' << csv::number(r.power_mape.median) << ','
      << csv::number(r.power_mape.q1) << ',' << csv::number(r.power_mape.q3) << '\n';
  }
}

}  // namespace powertrain
