#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "powertrain/nn.hpp"
#include "powertrain/pareto.hpp"
#include "powertrain/telemetry.hpp"

namespace powertrain {

enum class Provenance { reference, small_sample, transferred };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& s);

inline constexpr int kModelSchemaVersion = 1;
inline constexpr double kPredictionFloor = 1e-3;

struct ModelMetadata {
  std::string workload;
  std::string device;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;
  int epochs = 0;
  nn::LossKind loss = nn::LossKind::mse;
  std::size_t n_rows = 0;
  Provenance provenance = Provenance::reference;
  // Transferred models only.
  std::string reference_hash;
  std::string fine_tune_scope;
};

struct PredictionModel {
  Target kind = Target::time;
  nn::Network network;
  nn::Standardizer input_standardizer;
  nn::TargetScale target_scale;
  ModelMetadata metadata;

  // Natural units, floored at kPredictionFloor.
  double predict(const PowerMode& mode) const;
};

struct WorkloadModels {
  PredictionModel time;
  PredictionModel power;

  const PredictionModel& model(Target t) const { return t == Target::time ? time : power; }
  PredictionModel& model(Target t) { return t == Target::time ? time : power; }
};

struct Prediction {
  double time_ms = 0.0;
  double power_mw = 0.0;
};

Prediction predict(const WorkloadModels& models, const PowerMode& mode);
// Order preserved; threads > 1 splits the space across worker threads.
std::vector<TradeoffPoint> predict_sweep(const WorkloadModels& models, const PowerModeSpace& space,
                                         unsigned threads = 1);

// Mode-level MAPE (percent) of a model against corpus aggregates.
double model_mape(const PredictionModel& model, const Corpus& truth, const PowerModeSpace& modes);

// Balanced per-entry rows of corpus, standardizers fitted on them.
struct PreparedRows {
  nn::Matrix x;
  nn::Vector y;
  nn::Standardizer input_standardizer;
  nn::TargetScale target_scale;
};
PreparedRows prepare_rows(const Corpus& corpus, Target target, nn::ScalingKind scaling = nn::ScalingKind::zscore);

// Trains both models from scratch on the given corpus.
WorkloadModels train_models(const Corpus& corpus, const nn::TrainConfig& config, Provenance provenance);

struct ReferenceResult {
  WorkloadModels models;
  double time_mape = 0.0;   // test split, mode level
  double power_mape = 0.0;
  PowerModeSpace train_modes;
  PowerModeSpace test_modes;
};

// 90:10 split over modes drawn from config.seed. Throws DataError below 20
// modes and warns below 500.
ReferenceResult train_reference(const Corpus& corpus, const nn::TrainConfig& config);

// k modes from sample_random(corpus.modes(), k, seed), no test split.
WorkloadModels train_small(const Corpus& corpus, std::size_t k, std::uint64_t seed, const nn::TrainConfig& config);

void to_json(nlohmann::json& j, const PredictionModel& m);
void from_json(const nlohmann::json& j, PredictionModel& m);

// Hex SHA-256 of the canonical serialized model.
std::string content_hash(const PredictionModel& m);

void save_model(const PredictionModel& m, const std::filesystem::path& path);
// Throws ParseError on malformed JSON and DataError on schema mismatch.
PredictionModel load_model(const std::filesystem::path& path);

// dir/time.json and dir/power.json
void save_models(const WorkloadModels& models, const std::filesystem::path& dir);
WorkloadModels load_models(const std::filesystem::path& dir);

void write_sweep_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path);

}  // namespace powertrain
