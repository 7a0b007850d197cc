#include <doctest.h>

#include <algorithm>
#include <set>

#include "powertrain/error.hpp"
#include "powertrain/simdevice.hpp"
#include "powertrain/transfer.hpp"
#include "support.hpp"

using namespace powertrain;

namespace {

Corpus nano_corpus(const sim::SyntheticWorkload& wl) {
  const auto grid = orin_nano_grid();
  return sim::truth_corpus(grid, enumerate_full(grid), wl);
}

const ReferenceResult& reference() {
  static const ReferenceResult r = [] {
    nn::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 1;
    return train_reference(nano_corpus(sim::resnet_like()), cfg);
  }();
  return r;
}

const Corpus& target() {
  static const Corpus c = nano_corpus(sim::perturb_workload(sim::resnet_like(), 0.4, 3));
  return c;
}

Corpus sample_of(const Corpus& c, std::size_t k, std::uint64_t seed) {
  auto modes = sample_random(c.modes(), k, seed);
  std::sort(modes.begin(), modes.end());
  return c.subset(modes);
}

}  // namespace

TEST_CASE("retarget keeps the layer shapes and records lineage") {
  TransferConfig cfg;
  cfg.seed = 4;
  cfg.fine_tune_epochs = 20;
  const auto& ref = reference().models;
  const auto out = retarget(ref, sample_of(target(), 50, 4), cfg);
  for (Target t : {Target::time, Target::power}) {
    const auto& m = out.model(t);
    CHECK(m.network.widths() == std::vector<int>{256, 128, 64, 1});
    CHECK(m.network.widths() == ref.model(t).network.widths());
    CHECK(m.kind == t);
    CHECK(m.metadata.provenance == Provenance::transferred);
    CHECK(m.metadata.reference_hash == content_hash(ref.model(t)));
    CHECK(m.metadata.reference_hash.size() == 64);
    CHECK(m.metadata.fine_tune_scope == "all_layers");
    CHECK(m.metadata.workload == "resnet-like-perturbed");
    CHECK(m.metadata.n_rows == 50);
    // all layers move by default
    CHECK(m.network.layers[0].weights != ref.model(t).network.layers[0].weights);
  }
}

TEST_CASE("head-only with zero epochs changes only the head and scaling") {
  TransferConfig cfg;
  cfg.scope = FineTuneScope::head_only;
  cfg.fine_tune_epochs = 0;
  cfg.seed = 2;
  const auto sample = sample_of(target(), 50, 2);
  const auto& ref = reference().models;
  const auto out = retarget(ref, sample, cfg);

  const auto rows = training_rows(sample, Target::power, true);
  nn::Matrix raw(4, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < 4; ++f) raw(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)) = rows.features[i][f];
  }
  const auto expected_in = nn::Standardizer::fit(raw);
  const auto expected_out = nn::Standardizer::fit(rows.targets);

  for (Target t : {Target::time, Target::power}) {
    const auto& a = out.model(t).network;
    const auto& b = ref.model(t).network;
    for (std::size_t l = 0; l + 1 < a.layers.size(); ++l) {
      CHECK(a.layers[l].weights == b.layers[l].weights);
      CHECK(a.layers[l].bias == b.layers[l].bias);
    }
    CHECK(a.layers.back().weights != b.layers.back().weights);
    CHECK(a.layers.back().bias.isZero());
    CHECK(out.model(t).input_standardizer.means == expected_in.means);
    CHECK(out.model(t).input_standardizer.stds == expected_in.stds);
    CHECK(out.model(t).metadata.fine_tune_scope == "head_only");
  }
  CHECK(out.power.target_scale.mean == expected_out.means[0]);
  CHECK(out.power.target_scale.std == expected_out.stds[0]);

  cfg.fine_tune_epochs = 5;
  const auto tuned = retarget(ref, sample, cfg);
  CHECK(tuned.time.network.layers[1].weights == ref.time.network.layers[1].weights);
  CHECK(tuned.time.network.layers[3].weights != out.time.network.layers[3].weights);
}

TEST_CASE("self-transfer stays close to the reference") {
  const auto& ref = reference();
  const auto grid = orin_nano_grid();
  const auto own = nano_corpus(sim::resnet_like());
  std::vector<double> time_mapes, power_mapes;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto modes = sample_random(own.modes(), 50, 100 + s);
    std::sort(modes.begin(), modes.end());
    const auto raw = sim::generate_corpus(grid, modes, sim::resnet_like(), sim::NoiseSpec::none(s), 11);
    TransferConfig cfg;
    cfg.seed = s;
    const auto out = retarget(ref.models, build_corpus(raw).corpus, cfg);
    PowerModeSpace held;
    std::set_difference(ref.test_modes.begin(), ref.test_modes.end(), modes.begin(), modes.end(),
                        std::back_inserter(held));
    time_mapes.push_back(model_mape(out.time, own, held));
    power_mapes.push_back(model_mape(out.power, own, held));
  }
  CHECK(quartiles(time_mapes).median <= ref.time_mape + 5.0);
  CHECK(quartiles(power_mapes).median <= ref.power_mape + 5.0);
}

TEST_CASE("retarget input errors") {
  const auto& ref = reference().models;
  TransferConfig cfg;
  CHECK_THROWS_AS(retarget(ref, sample_of(target(), 49, 1), cfg), DataError);
  cfg.sample_count = 1;
  CHECK_THROWS_AS(retarget(ref, sample_of(target(), 49, 1), cfg), DataError);

  auto wide = ref;
  for (Target t : {Target::time, Target::power}) {
    auto& m = wide.model(t);
    m.network.layers[0].weights.conservativeResize(Eigen::NoChange, 5);
    m.input_standardizer.means.push_back(0.0);
    m.input_standardizer.stds.push_back(1.0);
  }
  CHECK_THROWS_AS(retarget(wide, sample_of(target(), 50, 1), TransferConfig{}), DimensionError);

  TransferConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = {};
  bad.fine_tune_epochs = -1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  CHECK(parse_scope("head_only") == FineTuneScope::head_only);
  CHECK_THROWS_AS(parse_scope("some"), DataError);
}

TEST_CASE("transfer is deterministic per seed") {
  TransferConfig cfg;
  cfg.seed = 12;
  cfg.fine_tune_epochs = 10;
  const auto sample = sample_of(target(), 50, 12);
  const auto a = retarget(reference().models, sample, cfg);
  const auto b = retarget(reference().models, sample, cfg);
  CHECK(content_hash(a.time) == content_hash(b.time));
  CHECK(content_hash(a.power) == content_hash(b.power));
  cfg.seed = 13;
  CHECK(content_hash(retarget(reference().models, sample, cfg).power) != content_hash(a.power));
}

TEST_CASE("report shape and trend") {
  TransferConfig cfg;
  cfg.seed = 21;
  const std::vector<std::size_t> ks{10, 20, 50, 100};
  const auto report = transfer_report(reference().models, target(), ks, 10, cfg);
  REQUIRE(report.summary.size() == 4);
  CHECK(report.trials.size() == 40);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto& s = report.summary[i];
    CHECK(s.k == ks[i]);
    CHECK(s.time_mape.q1 <= s.time_mape.median);
    CHECK(s.time_mape.median <= s.time_mape.q3);
    CHECK(s.power_mape.q1 <= s.power_mape.median);
    CHECK(s.power_mape.median <= s.power_mape.q3);
  }
  int time_inversions = 0, power_inversions = 0;
  for (std::size_t i = 1; i < ks.size(); ++i) {
    time_inversions += report.summary[i].time_mape.median > report.summary[i - 1].time_mape.median;
    power_inversions += report.summary[i].power_mape.median > report.summary[i - 1].power_mape.median;
  }
  CHECK(time_inversions <= 1);
  CHECK(power_inversions <= 1);

  testing::TempDir dir("report");
  write_transfer_report(report, dir / "trials.csv", dir / "summary.csv");
  const auto trials = testing::slurp(dir / "trials.csv");
  CHECK(trials.rfind("k,trial,time_mape,power_mape\n", 0) == 0);
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 41);
  const auto summary = testing::slurp(dir / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
}

TEST_CASE("single trial reports its own observation") {
  TransferConfig cfg;
  cfg.fine_tune_epochs = 5;
  const auto report = transfer_report(reference().models, target(), {30}, 1, cfg);
  REQUIRE(report.trials.size() == 1);
  CHECK(report.summary[0].time_mape.median == report.trials[0].time_mape);
  CHECK(report.summary[0].power_mape.q1 == report.trials[0].power_mape);
  CHECK(report.summary[0].power_mape.q3 == report.trials[0].power_mape);
  CHECK_THROWS_AS(transfer_report(reference().models, target(), {30}, 0, cfg), DataError);
  CHECK_THROWS_AS(transfer_report(reference().models, target(), {target().size()}, 1, cfg), DataError);
  CHECK_THROWS_AS(transfer_report(reference().models, target(), {}, 1, cfg), DataError);
}

TEST_CASE("trial seeds are distinct") {
  std::set<std::uint64_t> seeds;
  for (std::size_t k : {10u, 20u, 50u}) {
    for (int t = 0; t < 10; ++t) seeds.insert(trial_seed(0, k, t));
  }
  CHECK(seeds.size() == 30);
}
