#include "powertrain/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "csv.hpp"
#include "powertrain/error.hpp"
#include "powertrain/log.hpp"
#include "powertrain/metrics.hpp"

namespace powertrain {

namespace {

const char* units_of(Target t) { return t == Target::time ? "ms_per_minibatch" : "mw"; }

double kind_value(const ProfiledPoint& p, Target t) { return t == Target::time ? p.time_ms : p.power_mw; }

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::reference: return "reference";
    case Provenance::small_sample: return "small_sample";
    case Provenance::transferred: return "transferred";
  }
  return "reference";
}

Provenance parse_provenance(const std::string& s) {
  if (s == "reference") return Provenance::reference;
  if (s == "small_sample") return Provenance::small_sample;
  if (s == "transferred") return Provenance::transferred;
  throw DataError("unknown provenance '" + s + "'");
}

double PredictionModel::predict(const PowerMode& mode) const {
  const auto f = mode.features();
  std::array<double, kFeatureCount> scaled{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) scaled[i] = input_standardizer.apply(f[i], i);
  const double out = nn::forward(network, scaled) * target_scale.std + target_scale.mean;
  return std::isfinite(out) ? std::max(out, kPredictionFloor) : kPredictionFloor;
}

Prediction predict(const WorkloadModels& models, const PowerMode& mode) {
  return {models.time.predict(mode), models.power.predict(mode)};
}

std::vector<TradeoffPoint> predict_sweep(const WorkloadModels& models, const PowerModeSpace& space,
                                         unsigned threads) {
  if (space.empty()) throw DataError("predict_sweep: empty power-mode space");
  std::vector<TradeoffPoint> out(space.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto p = predict(models, space[i]);
      out[i] = {space[i], p.time_ms, p.power_mw, PointSource::predicted};
    }
  };
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(space.size()));
  if (threads == 1) {
    run(0, space.size());
    return out;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (space.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < space.size(); begin += chunk) {
    workers.emplace_back(run, begin, std::min(space.size(), begin + chunk));
  }
  return out;
}

double model_mape(const PredictionModel& model, const Corpus& truth, const PowerModeSpace& modes) {
  std::vector<double> pred, actual;
  pred.reserve(modes.size());
  actual.reserve(modes.size());
  for (const auto& mode : modes) {
    pred.push_back(model.predict(mode));
    actual.push_back(kind_value(truth.at(mode), model.kind));
  }
  return mape(pred, actual);
}

PreparedRows prepare_rows(const Corpus& corpus, Target target, nn::ScalingKind scaling) {
  const TrainingRows rows = training_rows(corpus, target, true);
  if (rows.size() < 2) throw DataError("need at least 2 training rows, corpus yields " + std::to_string(rows.size()));
  const auto n = static_cast<Eigen::Index>(rows.size());
  PreparedRows out;
  nn::Matrix raw(static_cast<Eigen::Index>(kFeatureCount), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = rows.features[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < kFeatureCount; ++k) raw(static_cast<Eigen::Index>(k), i) = f[k];
  }
  out.input_standardizer = nn::Standardizer::fit(raw, scaling);
  out.x = out.input_standardizer.apply(raw);
  const auto ts = nn::Standardizer::fit(rows.targets);
  out.target_scale = {ts.means[0], ts.stds[0]};
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y(i) = ts.apply(rows.targets[static_cast<std::size_t>(i)]);
  return out;
}

WorkloadModels train_models(const Corpus& corpus, const nn::TrainConfig& config, Provenance provenance) {
  WorkloadModels models;
  for (Target t : {Target::time, Target::power}) {
    PreparedRows rows = prepare_rows(corpus, t, config.input_scaling);
    auto result = nn::train(rows.x, rows.y, config, rows.target_scale);
    PredictionModel& m = models.model(t);
    m.kind = t;
    m.network = std::move(result.network);
    m.input_standardizer = std::move(rows.input_standardizer);
    m.target_scale = rows.target_scale;
    m.metadata.workload = corpus.workload;
    m.metadata.device = corpus.device;
    m.metadata.seed = config.seed;
    m.metadata.learning_rate = config.learning_rate;
    m.metadata.epochs = config.epochs;
    m.metadata.loss = config.loss;
    m.metadata.n_rows = static_cast<std::size_t>(rows.y.size());
    m.metadata.provenance = provenance;
  }
  return models;
}

ReferenceResult train_reference(const Corpus& corpus, const nn::TrainConfig& config) {
  if (corpus.size() < 20) {
    throw DataError("reference training needs at least 20 modes, corpus has " + std::to_string(corpus.size()));
  }
  if (corpus.size() < 500) {
    warn("reference corpus covers only " + std::to_string(corpus.size()) + " modes (500 or more recommended)");
  }
  ReferenceResult result;
  PowerModeSpace shuffled = sample_random(corpus.modes(), corpus.size(), config.seed);
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(shuffled.size()))));
  result.test_modes.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
  result.train_modes.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  std::sort(result.test_modes.begin(), result.test_modes.end());
  std::sort(result.train_modes.begin(), result.train_modes.end());
  result.models = train_models(corpus.subset(result.train_modes), config, Provenance::reference);
  result.time_mape = model_mape(result.models.time, corpus, result.test_modes);
  result.power_mape = model_mape(result.models.power, corpus, result.test_modes);
  return result;
}

WorkloadModels train_small(const Corpus& corpus, std::size_t k, std::uint64_t seed, const nn::TrainConfig& config) {
  if (k < 2) throw DataError("small-sample training needs k >= 2");
  PowerModeSpace modes = sample_random(corpus.modes(), k, seed);
  std::sort(modes.begin(), modes.end());
  nn::TrainConfig cfg = config;
  cfg.seed = seed;
  return train_models(corpus.subset(modes), cfg, Provenance::small_sample);
}

void to_json(nlohmann::json& j, const PredictionModel& m) {
  nlohmann::json net = m.network;
  j = nlohmann::json::object();
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = to_string(m.kind);
  j["units"] = units_of(m.kind);
  j["feature_order"] = kFeatureNames;
  j["input_standardizer"] = m.input_standardizer;
  j["target_standardizer"] = {{"mean", m.target_scale.mean}, {"std", m.target_scale.std}};
  j["layers"] = net.at("layers");
  j["activations"] = net.at("activations");
  j["dropout"] = net.at("dropout");
  j["training"] = {{"seed", m.metadata.seed},
                   {"lr", m.metadata.learning_rate},
                   {"epochs", m.metadata.epochs},
                   {"loss", nn::to_string(m.metadata.loss)},
                   {"n_rows", m.metadata.n_rows},
                   {"source_workload", m.metadata.workload},
                   {"source_device", m.metadata.device}};
  j["provenance"] = to_string(m.metadata.provenance);
  if (!m.metadata.reference_hash.empty()) j["reference_sha256"] = m.metadata.reference_hash;
  if (!m.metadata.fine_tune_scope.empty()) j["fine_tune_scope"] = m.metadata.fine_tune_scope;
}

void from_json(const nlohmann::json& j, PredictionModel& m) {
  const int version = j.at("schema_version").get<int>();
  if (version != kModelSchemaVersion) {
    throw DataError("model schema_version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelSchemaVersion) + ")");
  }
  m.kind = parse_target(j.at("kind").get<std::string>());
  if (j.at("units").get<std::string>() != units_of(m.kind)) throw DataError("model units do not match its kind");
  const auto order = j.at("feature_order").get<std::vector<std::string>>();
  if (order.size() != kFeatureCount || !std::equal(order.begin(), order.end(), kFeatureNames.begin())) {
    throw DimensionError("model feature_order does not match [cores, cpu_mhz, gpu_mhz, mem_mhz]");
  }
  j.at("input_standardizer").get_to(m.input_standardizer);
  if (m.input_standardizer.width() != kFeatureCount) throw DimensionError("input standardizer width is not 4");
  m.target_scale.mean = j.at("target_standardizer").at("mean").get<double>();
  m.target_scale.std = j.at("target_standardizer").at("std").get<double>();
  nlohmann::json net = {{"layers", j.at("layers")}, {"activations", j.at("activations")}, {"dropout", j.at("dropout")}};
  net.get_to(m.network);
  if (m.network.input_width() != static_cast<Eigen::Index>(kFeatureCount)) {
    throw DimensionError("model network does not take 4 inputs");
  }
  const auto& tr = j.at("training");
  tr.at("seed").get_to(m.metadata.seed);
  tr.at("lr").get_to(m.metadata.learning_rate);
  tr.at("epochs").get_to(m.metadata.epochs);
  m.metadata.loss = nn::parse_loss_kind(tr.at("loss").get<std::string>());
  tr.at("n_rows").get_to(m.metadata.n_rows);
  tr.at("source_workload").get_to(m.metadata.workload);
  tr.at("source_device").get_to(m.metadata.device);
  m.metadata.provenance = parse_provenance(j.at("provenance").get<std::string>());
  m.metadata.reference_hash = j.value("reference_sha256", "");
  m.metadata.fine_tune_scope = j.value("fine_tune_scope", "");
}

std::string content_hash(const PredictionModel& m) {
  const std::string text = nlohmann::json(m).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

void save_model(const PredictionModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << nlohmann::json(m).dump(1) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

PredictionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  try {
    return j.get<PredictionModel>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path.string() + ": " + e.what());
  }
}

void save_models(const WorkloadModels& models, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_model(models.time, dir / "time.json");
  save_model(models.power, dir / "power.json");
}

WorkloadModels load_models(const std::filesystem::path& dir) {
  WorkloadModels models{load_model(dir / "time.json"), load_model(dir / "power.json")};
  if (models.time.kind != Target::time || models.power.kind != Target::power) {
    throw DataError("model directory " + dir.string() + " has time/power files of the wrong kind");
  }
  return models;
}

void write_sweep_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "cores,cpu_mhz,gpu_mhz,mem_mhz,pred_time_ms,pred_power_mw\n";
  for (const auto& p : points) {
    out << p.mode.cores << ',' << p.mode.cpu_mhz << ',' << p.mode.gpu_mhz << ',' << p.mode.mem_mhz << ','
        << csv::number(p.time_ms) << ',' << csv::number(p.power_mw) << '\n';
  }
}

}  // namespace powertrain
