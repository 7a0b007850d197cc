#include <doctest.h>

#include <cmath>
#include <limits>

#include "powertrain/error.hpp"
#include "powertrain/log.hpp"
#include "powertrain/metrics.hpp"
#include "powertrain/predictor.hpp"
#include "powertrain/simdevice.hpp"
#include "support.hpp"

using namespace powertrain;

namespace {

const Corpus& nano_truth() {
  static const Corpus c = [] {
    const auto grid = orin_nano_grid();
    return sim::truth_corpus(grid, enumerate_full(grid), sim::resnet_like());
  }();
  return c;
}

// one converged fit shared by the cheaper checks
const ReferenceResult& nano_reference() {
  static const ReferenceResult r = [] {
    nn::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 3;
    return train_reference(nano_truth(), cfg);
  }();
  return r;
}

bool same_predictions(const WorkloadModels& a, const WorkloadModels& b, const PowerModeSpace& probes) {
  for (const auto& m : probes) {
    const auto pa = predict(a, m);
    const auto pb = predict(b, m);
    if (pa.time_ms != pb.time_ms || pa.power_mw != pb.power_mw) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reference split is 90:10 over modes") {
  const auto& r = nano_reference();
  CHECK(r.test_modes.size() == 180);
  CHECK(r.train_modes.size() == 1620);
  PowerModeSpace all = r.train_modes;
  all.insert(all.end(), r.test_modes.begin(), r.test_modes.end());
  std::sort(all.begin(), all.end());
  CHECK(all == nano_truth().modes());
  CHECK(r.models.time.metadata.provenance == Provenance::reference);
  CHECK(r.models.time.metadata.n_rows == 1620);
  CHECK(r.models.power.metadata.device == "orin-nano");
  CHECK(r.time_mape == doctest::Approx(model_mape(r.models.time, nano_truth(), r.test_modes)));
}

TEST_CASE("converged fit tracks the surface") {
  const auto& r = nano_reference();
  CHECK(r.time_mape < 15.0);
  CHECK(r.power_mape < 8.0);
  const auto grid = orin_nano_grid();
  std::size_t time_ok = 0, power_ok = 0;
  for (const auto& m : r.train_modes) {
    const auto p = predict(r.models, m);
    time_ok += std::abs(p.time_ms / nano_truth().at(m).time_ms - 1.0) < 0.15;
    power_ok += std::abs(p.power_mw / nano_truth().at(m).power_mw - 1.0) < 0.15;
  }
  CHECK(time_ok >= 0.95 * r.train_modes.size());
  CHECK(power_ok >= 0.95 * r.train_modes.size());
  const auto top = predict(r.models, maxn(grid));
  CHECK(std::abs(top.time_ms / nano_truth().at(maxn(grid)).time_ms - 1.0) < 0.15);
  CHECK(std::abs(top.power_mw / nano_truth().at(maxn(grid)).power_mw - 1.0) < 0.15);
  const PowerMode slowest{1, grid.cpu_freqs.front(), grid.gpu_freqs.front(), grid.mem_freqs.front()};
  CHECK(predict(r.models, maxn(grid)).time_ms <= predict(r.models, slowest).time_ms);
  CHECK(predict(r.models, maxn(grid)).power_mw >= predict(r.models, slowest).power_mw);
}

TEST_CASE("reference training is deterministic per seed") {
  const auto grid = orin_nano_grid();
  const auto corpus = nano_truth().subset(sample_random(nano_truth().modes(), 300, 1));
  nn::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 17;
  const auto a = train_reference(corpus, cfg);
  const auto b = train_reference(corpus, cfg);
  CHECK(a.time_mape == b.time_mape);
  CHECK(a.power_mape == b.power_mape);
  CHECK(a.test_modes == b.test_modes);
  cfg.seed = 18;
  CHECK(train_reference(corpus, cfg).test_modes != a.test_modes);
}

TEST_CASE("identical targets are learned almost exactly") {
  Corpus flat;
  flat.workload = "flat";
  flat.device = "orin-nano";
  for (const auto& m : sample_random(nano_truth().modes(), 200, 2)) flat.points[m] = {m, 10.0, 20000.0, 1, 1};
  nn::TrainConfig cfg;
  cfg.epochs = 40;
  const auto r = train_reference(flat, cfg);
  CHECK(r.time_mape < 1.0);
  CHECK(r.power_mape < 1.0);
}

TEST_CASE("corpus size limits") {
  const auto tiny = nano_truth().subset(sample_random(nano_truth().modes(), 19, 1));
  CHECK_THROWS_AS(train_reference(tiny, nn::TrainConfig{}), DataError);

  std::vector<std::string> seen;
  set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  train_reference(nano_truth().subset(sample_random(nano_truth().modes(), 40, 1)), cfg);
  set_warning_sink([](const std::string&) {});
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].find("500") != std::string::npos);
}

TEST_CASE("small-sample training") {
  nn::TrainConfig cfg;
  cfg.epochs = 20;
  const auto a = train_small(nano_truth(), 50, 9, cfg);
  const auto b = train_small(nano_truth(), 50, 9, cfg);
  const auto probes = sample_random(nano_truth().modes(), 100, 4);
  CHECK(same_predictions(a, b, probes));
  CHECK(a.time.metadata.provenance == Provenance::small_sample);
  CHECK(a.time.metadata.seed == 9);
  CHECK(a.power.metadata.n_rows == 50);
  CHECK_THROWS_AS(train_small(nano_truth(), 1, 9, cfg), DataError);
  CHECK_THROWS_AS(train_small(nano_truth(), 5000, 9, cfg), DataError);

  // held-out error of a 50-mode fit is no better than the full reference
  const auto& ref = nano_reference();
  PowerModeSpace held;
  auto sample = sample_random(nano_truth().modes(), 50, 9);
  std::sort(sample.begin(), sample.end());
  std::set_difference(ref.test_modes.begin(), ref.test_modes.end(), sample.begin(), sample.end(),
                      std::back_inserter(held));
  CHECK(model_mape(a.power, nano_truth(), held) >= ref.power_mape);
}

TEST_CASE("predictions are floored") {
  auto models = nano_reference().models;
  models.power.network.layers.back().bias(0) = -1e9;
  CHECK(predict(models, maxn(orin_nano_grid())).power_mw == kPredictionFloor);
  models.time.network.layers.back().bias(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(predict(models, maxn(orin_nano_grid())).time_ms == kPredictionFloor);
}

TEST_CASE("sweep is a pure map") {
  const auto& models = nano_reference().models;
  const auto space = nano_truth().modes();
  const auto serial = predict_sweep(models, space, 1);
  REQUIRE(serial.size() == space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto p = predict(models, space[i]);
    CHECK(serial[i].mode == space[i]);
    CHECK(serial[i].time_ms == p.time_ms);
    CHECK(serial[i].power_mw == p.power_mw);
    CHECK(serial[i].source == PointSource::predicted);
  }
  for (unsigned threads : {2u, 3u, 8u, 5000u}) {
    const auto par = predict_sweep(models, space, threads);
    bool same = true;
    for (std::size_t i = 0; i < space.size(); ++i) {
      same = same && par[i].mode == serial[i].mode && par[i].time_ms == serial[i].time_ms &&
             par[i].power_mw == serial[i].power_mw;
    }
    CHECK(same);
  }
  const auto one = predict_sweep(models, {space[7]});
  REQUIRE(one.size() == 1);
  CHECK(one[0].time_ms == predict(models, space[7]).time_ms);
  CHECK_THROWS_AS(predict_sweep(models, {}), DataError);
  const auto grid = orin_agx_grid();
  CHECK(predict_sweep(models, subsample_profiling_grid(grid), 4).size() == 4368);
}

TEST_CASE("model files round-trip bit-exactly") {
  testing::TempDir dir("model");
  auto models = nano_reference().models;
  models.power.metadata.provenance = Provenance::transferred;
  models.power.metadata.reference_hash = "abc123";
  models.power.metadata.fine_tune_scope = "head_only";
  models.power.metadata.loss = nn::LossKind::mape;
  save_models(models, dir.path() / "m");
  const auto back = load_models(dir.path() / "m");
  CHECK(same_predictions(models, back, sample_random(nano_truth().modes(), 100, 12)));
  CHECK(content_hash(back.time) == content_hash(models.time));
  CHECK(content_hash(back.power) != content_hash(back.time));
  const auto& md = back.power.metadata;
  CHECK(md.provenance == Provenance::transferred);
  CHECK(md.reference_hash == "abc123");
  CHECK(md.fine_tune_scope == "head_only");
  CHECK(md.loss == nn::LossKind::mape);
  CHECK(md.workload == "resnet-like");
  CHECK(md.seed == 3);
  CHECK(md.epochs == 60);
  CHECK(back.time.metadata.reference_hash.empty());

  const auto j = nlohmann::json::parse(testing::slurp(dir.path() / "m/time.json"));
  CHECK(j["schema_version"] == kModelSchemaVersion);
  CHECK(j["units"] == "ms_per_minibatch");
  CHECK(j["feature_order"] == nlohmann::json{"cores", "cpu_mhz", "gpu_mhz", "mem_mhz"});
  CHECK(j["layers"].size() == 4);
}

TEST_CASE("malformed model files") {
  testing::TempDir dir("badmodel");
  const auto& m = nano_reference().models.time;
  save_model(m, dir / "ok.json");
  const auto text = testing::slurp(dir / "ok.json");

  testing::spit(dir / "cut.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_model(dir / "cut.json"), ParseError);

  auto j = nlohmann::json::parse(text);
  j["schema_version"] = 2;
  testing::spit(dir / "v2.json", j.dump());
  CHECK_THROWS_AS(load_model(dir / "v2.json"), DataError);

  j = nlohmann::json::parse(text);
  j["units"] = "mw";
  testing::spit(dir / "units.json", j.dump());
  CHECK_THROWS_AS(load_model(dir / "units.json"), DataError);

  j = nlohmann::json::parse(text);
  j["feature_order"] = {"cpu_mhz", "cores", "gpu_mhz", "mem_mhz"};
  testing::spit(dir / "order.json", j.dump());
  CHECK_THROWS_AS(load_model(dir / "order.json"), DimensionError);

  j = nlohmann::json::parse(text);
  j.erase("training");
  testing::spit(dir / "missing.json", j.dump());
  CHECK_THROWS_AS(load_model(dir / "missing.json"), DataError);

  CHECK_THROWS_AS(load_model(dir / "absent.json"), DataError);

  std::filesystem::create_directories(dir / "swapped");
  save_model(nano_reference().models.power, dir / "swapped/time.json");
  save_model(nano_reference().models.time, dir / "swapped/power.json");
  CHECK_THROWS_AS(load_models(dir / "swapped"), DataError);
}

TEST_CASE("sweep csv") {
  testing::TempDir dir("sweep");
  const auto pts = predict_sweep(nano_reference().models, sample_random(nano_truth().modes(), 25, 1));
  write_sweep_csv(pts, dir / "s.csv");
  CHECK(testing::slurp(dir / "s.csv").rfind("cores,cpu_mhz,gpu_mhz,mem_mhz,pred_time_ms,pred_power_mw\n", 0) == 0);
  const auto back = read_points_csv(dir / "s.csv");
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].mode == pts[i].mode);
    CHECK(back[i].time_ms == pts[i].time_ms);
    CHECK(back[i].power_mw == pts[i].power_mw);
  }
}

TEST_CASE("noiseless power surface over the full grid") {
  const auto grid = orin_agx_grid();
  const auto truth = sim::truth_corpus(grid, enumerate_full(grid), sim::resnet_like());
  auto modes = sample_random(truth.modes(), truth.size(), 8);
  const PowerModeSpace test(modes.begin(), modes.begin() + 1810);
  PowerModeSpace train(modes.begin() + 1810, modes.end());
  std::sort(train.begin(), train.end());
  const auto rows = prepare_rows(truth.subset(train), Target::power);
  nn::TrainConfig cfg;
  cfg.seed = 8;
  auto result = nn::train(rows.x, rows.y, cfg, rows.target_scale);
  PredictionModel m;
  m.kind = Target::power;
  m.network = std::move(result.network);
  m.input_standardizer = rows.input_standardizer;
  m.target_scale = rows.target_scale;
  CHECK(model_mape(m, truth, test) < 8.0);
}

TEST_CASE("provenance names") {
  for (auto p : {Provenance::reference, Provenance::small_sample, Provenance::transferred}) {
    CHECK(parse_provenance(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_provenance("guess"), DataError);
}
