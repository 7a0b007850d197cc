#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "json_config.hpp"
#include "powertrain/error.hpp"
#include "powertrain/evaluation.hpp"
#include "powertrain/log.hpp"
#include "powertrain/pareto.hpp"
#include "powertrain/predictor.hpp"
#include "powertrain/simdevice.hpp"
#include "powertrain/telemetry.hpp"
#include "powertrain/transfer.hpp"

namespace fs = std::filesystem;
using namespace powertrain;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3 };

struct Seed {
  std::uint64_t value = 0;
  CLI::Option* opt = nullptr;

  void add(CLI::App* app) { opt = app->add_option("--seed", value, "Random seed (drawn and printed when omitted)"); }

  std::uint64_t resolve() {
    if (opt->count() == 0) {
      std::random_device rd;
      value = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    }
    return value;
  }
};

struct CorpusSource {
  std::string telemetry;
  std::string corpus;
  std::size_t window = 3;
  double epsilon = 0.05;

  void add(CLI::App* app, const std::string& role) {
    app->add_option("--telemetry", telemetry, "Directory with minibatches.csv and power.csv (" + role + ")");
    app->add_option("--corpus", corpus, "Aggregated corpus CSV from ingest (" + role + ")");
    app->add_option("--window", window, "Power stabilization window")->capture_default_str();
    app->add_option("--epsilon", epsilon, "Relative range allowed in a stable window")->capture_default_str();
  }

  bool given() const { return !telemetry.empty() || !corpus.empty(); }

  void check() const {
    if (telemetry.empty() == corpus.empty()) throw DataError("give exactly one of --telemetry or --corpus");
    if (!telemetry.empty()) {
      for (const char* f : {"minibatches.csv", "power.csv"}) {
        if (!fs::exists(fs::path(telemetry) / f)) throw DataError("missing " + (fs::path(telemetry) / f).string());
      }
    } else if (!fs::exists(corpus)) {
      throw DataError("corpus file " + corpus + " does not exist");
    }
  }

  Corpus load() const {
    check();
    if (!corpus.empty()) return read_corpus_csv(corpus);
    const auto raw = parse_corpus(fs::path(telemetry) / "minibatches.csv", fs::path(telemetry) / "power.csv");
    CleanOptions opts;
    opts.window = window;
    opts.epsilon_rel = epsilon;
    auto result = build_corpus(raw, opts);
    constexpr std::size_t kShown = 5;
    for (std::size_t i = 0; i < std::min(kShown, result.warnings.size()); ++i) warn(result.warnings[i]);
    if (result.warnings.size() > kShown) {
      warn("... " + std::to_string(result.warnings.size() - kShown) + " more; " +
           std::to_string(result.rejected.size()) + " of " + std::to_string(raw.profiles.size()) +
           " profiles rejected");
    }
    if (result.corpus.empty()) throw DataError("no profile of " + telemetry + " survived cleaning");
    return std::move(result.corpus);
  }
};

struct TrainFlags {
  int epochs = 100;
  double lr = 0.001;
  std::string loss = "mse";
  int batch = 32;
  double dropout = 0.2;
  double validation = 0.1;
  std::string scaling = "zscore";

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--loss", loss, "mse or mape")->capture_default_str()->check(CLI::IsMember({"mse", "mape"}));
    app->add_option("--batch", batch, "Rows per minibatch")->capture_default_str();
    app->add_option("--dropout", dropout, "Dropout probability")->capture_default_str();
    app->add_option("--validation-fraction", validation, "Rows held out for checkpointing")->capture_default_str();
    app->add_option("--scaling", scaling, "Input scaling: zscore or minmax")
        ->capture_default_str()
        ->check(CLI::IsMember({"zscore", "minmax"}));
  }

  nn::TrainConfig config(std::uint64_t seed) const {
    nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.loss = nn::parse_loss_kind(loss);
    cfg.minibatch_rows = batch;
    cfg.dropout_p = dropout;
    cfg.validation_fraction = validation;
    cfg.input_scaling = scaling == "minmax" ? nn::ScalingKind::minmax : nn::ScalingKind::zscore;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

PowerModeSpace make_space(const DeviceGrid& grid, const std::string& space) {
  if (space == "full") return enumerate_full(grid);
  if (space == "subsample") return subsample_profiling_grid(grid);
  throw DataError("unknown space '" + space + "' (expected subsample or full)");
}

void print_seed(std::uint64_t seed) { std::cout << "seed: " << seed << '\n'; }

json mode_json(const PowerMode& m) {
  return {{"cores", m.cores}, {"cpu_mhz", m.cpu_mhz}, {"gpu_mhz", m.gpu_mhz}, {"mem_mhz", m.mem_mhz}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw DataError("output directory is empty");
  fs::create_directories(dir);
}

std::vector<double> parse_budgets(const std::string& spec) {
  if (spec.empty()) return SweepConfig::standard().budgets_mw;
  const auto c1 = spec.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw DataError("budget range must be first:last:step");
    return SweepConfig::range(Budget::parse(spec.substr(0, c1)).power_limit_mw,
                              Budget::parse(spec.substr(c1 + 1, c2 - c1 - 1)).power_limit_mw,
                              Budget::parse(spec.substr(c2 + 1)).power_limit_mw)
        .budgets_mw;
  }
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Budget::parse(item).power_limit_mw);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-minibatch time and power prediction, transfer and power-budget optimization for edge DNN training"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (pipeline.json); flags override it");
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress warnings");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate raw telemetry from the synthetic device");
  std::string sim_grid = "orin", sim_space = "subsample", sim_workload = "resnet-like", sim_out;
  double perturb = 0.0, time_sigma = 0.01, power_sigma = 0.02, first_factor = 5.0;
  std::uint64_t perturb_seed = 0;
  std::size_t ramp = 3, minibatches = 40, sim_sample = 0;
  Seed sim_seed;
  simulate->add_option("--grid", sim_grid, "Grid preset (orin, xavier, nano) or JSON file")->capture_default_str();
  simulate->add_option("--space", sim_space, "subsample or full")->capture_default_str();
  simulate->add_option("--workload", sim_workload, "Workload preset or JSON file")->capture_default_str();
  simulate->add_option("--perturb", perturb, "Perturb the workload by this magnitude")->capture_default_str();
  simulate->add_option("--perturb-seed", perturb_seed, "Seed of the perturbation")->capture_default_str();
  simulate->add_option("--modes", sim_sample, "Profile only this many random modes of the space (0 = all)");
  simulate->add_option("--minibatches", minibatches, "Minibatches per mode")->capture_default_str();
  simulate->add_option("--time-sigma", time_sigma, "Relative time noise")->capture_default_str();
  simulate->add_option("--power-sigma", power_sigma, "Relative power noise")->capture_default_str();
  simulate->add_option("--first-factor", first_factor, "Slowdown of the first minibatch")->capture_default_str();
  simulate->add_option("--ramp", ramp, "Power ramp samples before stabilization")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output directory")->required();
  sim_seed.add(simulate);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Clean raw telemetry into a per-mode corpus CSV");
  CorpusSource ingest_src;
  std::string ingest_out;
  ingest->add_option("--telemetry", ingest_src.telemetry, "Directory with minibatches.csv and power.csv")->required();
  ingest->add_option("--window", ingest_src.window, "Power stabilization window")->capture_default_str();
  ingest->add_option("--epsilon", ingest_src.epsilon, "Relative range allowed in a stable window")
      ->capture_default_str();
  ingest->add_option("--out", ingest_out, "Corpus CSV to write")->required();

  // train-ref
  auto* train_ref = app.add_subcommand("train-ref", "Train reference time and power models (90:10 mode split)");
  CorpusSource ref_src;
  TrainFlags ref_flags;
  std::string ref_out;
  Seed ref_seed;
  ref_src.add(train_ref, "training data");
  ref_flags.add(train_ref);
  train_ref->add_option("--out", ref_out, "Model directory")->required();
  ref_seed.add(train_ref);

  // train-nn
  auto* train_nn = app.add_subcommand("train-nn", "Train models from scratch on k sampled modes");
  CorpusSource nn_src;
  TrainFlags nn_flags;
  std::size_t nn_k = 50;
  std::string nn_out;
  Seed nn_seed;
  nn_src.add(train_nn, "modes are sampled from it");
  nn_flags.add(train_nn);
  train_nn->add_option("-k,--k", nn_k, "Number of sampled modes")->capture_default_str();
  train_nn->add_option("--out", nn_out, "Model directory")->required();
  nn_seed.add(train_nn);

  // transfer
  auto* transfer = app.add_subcommand("transfer", "Retarget reference models to a new workload or device");
  CorpusSource tr_src;
  std::string tr_reference, tr_out, tr_loss = "mse", tr_scope = "all_layers", tr_report_k;
  std::size_t tr_k = 50;
  int tr_epochs = 100, tr_trials = 10, tr_batch = 32;
  double tr_lr = 0.001, tr_dropout = 0.2;
  bool tr_use_all = false;
  Seed tr_seed;
  transfer->add_option("--reference", tr_reference, "Reference model directory")->required();
  tr_src.add(transfer, "target workload profiles");
  transfer->add_option("-k,--k", tr_k, "Modes sampled from the target data")->capture_default_str();
  transfer->add_flag("--use-all", tr_use_all, "Use every mode of the target data instead of sampling k");
  transfer->add_option("--epochs", tr_epochs, "Fine-tuning epochs")->capture_default_str();
  transfer->add_option("--lr", tr_lr, "Fine-tuning learning rate")->capture_default_str();
  transfer->add_option("--loss", tr_loss, "mse or mape")->capture_default_str()->check(CLI::IsMember({"mse", "mape"}));
  transfer->add_option("--scope", tr_scope, "all_layers or head_only")
      ->capture_default_str()
      ->check(CLI::IsMember({"all_layers", "head_only"}));
  transfer->add_option("--batch", tr_batch, "Rows per minibatch")->capture_default_str();
  transfer->add_option("--dropout", tr_dropout, "Dropout probability")->capture_default_str();
  transfer->add_option("--out", tr_out, "Model directory")->required();
  transfer->add_option("--report-k", tr_report_k,
                       "Comma-separated k values; also write a transfer report over them (e.g. 10,20,50,100)");
  transfer->add_option("--trials", tr_trials, "Trials per k for --report-k")->capture_default_str();
  tr_seed.add(transfer);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict time and power of one power mode");
  std::string pr_models, pr_grid = "orin";
  PowerMode pr_mode;
  bool pr_json = false;
  predict_cmd->add_option("--models", pr_models, "Model directory")->required();
  predict_cmd->add_option("--grid", pr_grid, "Grid the mode must belong to")->capture_default_str();
  predict_cmd->add_option("--cores", pr_mode.cores, "Active CPU cores")->required();
  predict_cmd->add_option("--cpu", pr_mode.cpu_mhz, "CPU frequency, MHz")->required();
  predict_cmd->add_option("--gpu", pr_mode.gpu_mhz, "GPU frequency, MHz")->required();
  predict_cmd->add_option("--mem", pr_mode.mem_mhz, "Memory frequency, MHz")->required();
  predict_cmd->add_flag("--json", pr_json, "Machine-readable output");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Predict every mode of a grid into a CSV");
  std::string sw_models, sw_grid = "orin", sw_space = "subsample", sw_out;
  unsigned sw_threads = 1;
  sweep->add_option("--models", sw_models, "Model directory")->required();
  sweep->add_option("--grid", sw_grid, "Grid preset or JSON file")->capture_default_str();
  sweep->add_option("--space", sw_space, "subsample or full")->capture_default_str();
  sweep->add_option("--threads", sw_threads, "Worker threads")->capture_default_str();
  sweep->add_option("--out", sw_out, "Sweep CSV to write")->required();

  // pareto
  auto* pareto = app.add_subcommand("pareto", "Build the Pareto front of a sweep or corpus CSV");
  std::string pa_in, pa_out;
  bool pa_verbose = false;
  pareto->add_option("--in", pa_in, "Sweep, corpus or front CSV")->required();
  pareto->add_option("--out", pa_out, "Front CSV to write")->required();
  pareto->add_flag("-v,--verbose", pa_verbose, "List modes tied with front members");

  // optimize
  auto* optimize_cmd = app.add_subcommand("optimize", "Pick the fastest mode within a power budget");
  std::string op_front, op_budget;
  CorpusSource op_truth;
  long op_samples = 0, op_batch = 16;
  bool op_json = false;
  optimize_cmd->add_option("--front", op_front, "Front, sweep or corpus CSV")->required();
  optimize_cmd->add_option("--budget", op_budget, "Power budget, e.g. 30W or 30000mW")->required();
  op_truth.add(optimize_cmd, "ground truth for observed values");
  optimize_cmd->add_option("--epoch-samples", op_samples, "Dataset size for epoch time and energy");
  optimize_cmd->add_option("--minibatch-size", op_batch, "Samples per minibatch")->capture_default_str();
  optimize_cmd->add_flag("--json", op_json, "Machine-readable output");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score strategies over a budget sweep against ground truth");
  CorpusSource ev_truth;
  std::vector<std::string> ev_strategies;
  std::string ev_budgets, ev_out_json, ev_out_csv;
  bool ev_json = false;
  Seed ev_seed;
  ev_truth.add(evaluate, "ground truth");
  evaluate
      ->add_option("--strategy", ev_strategies,
                   "oracle, maxn, rnd[:k], powertrain:<model dir> or nn:<model dir>; repeatable")
      ->required();
  evaluate->add_option("--budgets", ev_budgets, "first:last:step or a comma list (default 17W:50W:1W)");
  evaluate->add_option("--out-json", ev_out_json, "Report JSON to write");
  evaluate->add_option("--out-csv", ev_out_csv, "Per-budget outcome CSV to write");
  evaluate->add_flag("--json", ev_json, "Print the report JSON");
  ev_seed.add(evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (quiet) set_warning_sink([](const std::string&) {});

  try {
    if (simulate->parsed()) {
      const DeviceGrid grid = load_grid(sim_grid);
      sim::SyntheticWorkload wl = sim::load_workload(sim_workload);
      if (perturb > 0.0) wl = sim::perturb_workload(wl, perturb, perturb_seed);
      PowerModeSpace space = make_space(grid, sim_space);
      const std::uint64_t seed = sim_seed.resolve();
      if (sim_sample > 0) {
        space = sample_random(space, sim_sample, seed);
        std::sort(space.begin(), space.end());
      }
      sim::NoiseSpec noise{time_sigma, power_sigma, first_factor, ramp, seed};
      ensure_dir(sim_out);
      const auto raw = sim::generate_corpus(grid, space, wl, noise, minibatches);
      write_telemetry(raw, fs::path(sim_out) / "minibatches.csv", fs::path(sim_out) / "power.csv");
      sim::write_workload_file(wl, fs::path(sim_out) / "workload.json");
      write_grid_file(grid, fs::path(sim_out) / "grid.json");
      print_seed(seed);
      std::cout << "simulated " << space.size() << " modes of '" << wl.name << "' on " << grid.name << " into "
                << sim_out << '\n';
    } else if (ingest->parsed()) {
      const Corpus corpus = ingest_src.load();
      write_corpus_csv(corpus, ingest_out);
      std::cout << "corpus: " << corpus.size() << " modes written to " << ingest_out << '\n';
    } else if (train_ref->parsed()) {
      ref_src.check();
      const std::uint64_t seed = ref_seed.resolve();
      const auto cfg = ref_flags.config(seed);
      const Corpus corpus = ref_src.load();
      const auto result = train_reference(corpus, cfg);
      ensure_dir(ref_out);
      save_models(result.models, ref_out);
      write_json({{"seed", seed},
                  {"mape_basis", "mode_aggregate"},
                  {"train_modes", result.train_modes.size()},
                  {"test_modes", result.test_modes.size()},
                  {"time_mape_pct", result.time_mape},
                  {"power_mape_pct", result.power_mape}},
                 fs::path(ref_out) / "report.json");
      print_seed(seed);
      std::cout << "test MAPE (mode aggregate): time " << result.time_mape << "%, power " << result.power_mape
                << "% over " << result.test_modes.size() << " held-out modes\n";
    } else if (train_nn->parsed()) {
      nn_src.check();
      const std::uint64_t seed = nn_seed.resolve();
      const auto cfg = nn_flags.config(seed);
      const Corpus corpus = nn_src.load();
      const auto models = train_small(corpus, nn_k, seed, cfg);
      ensure_dir(nn_out);
      save_models(models, nn_out);
      print_seed(seed);
      std::cout << "trained on " << nn_k << " modes into " << nn_out << '\n';
    } else if (transfer->parsed()) {
      tr_src.check();
      const std::uint64_t seed = tr_seed.resolve();
      const WorkloadModels reference = load_models(tr_reference);
      TransferConfig cfg;
      cfg.sample_count = tr_k;
      cfg.fine_tune_epochs = tr_epochs;
      cfg.learning_rate = tr_lr;
      cfg.loss = nn::parse_loss_kind(tr_loss);
      cfg.scope = parse_scope(tr_scope);
      cfg.seed = seed;
      cfg.base.minibatch_rows = tr_batch;
      cfg.base.dropout_p = tr_dropout;
      cfg.validate();
      const Corpus target = tr_src.load();
      Corpus sample = target;
      if (!tr_use_all) {
        PowerModeSpace modes = sample_random(target.modes(), tr_k, seed);
        std::sort(modes.begin(), modes.end());
        sample = target.subset(modes);
      } else {
        cfg.sample_count = std::min(cfg.sample_count, target.size());
      }
      const auto models = retarget(reference, sample, cfg);
      ensure_dir(tr_out);
      save_models(models, tr_out);
      print_seed(seed);
      std::cout << "transferred from " << tr_reference << " using " << sample.size() << " modes into " << tr_out
                << '\n';
      if (!tr_report_k.empty()) {
        std::vector<std::size_t> ks;
        std::stringstream ss(tr_report_k);
        std::string item;
        while (std::getline(ss, item, ',')) ks.push_back(std::stoul(item));
        const auto report = transfer_report(reference, target, ks, tr_trials, cfg);
        write_transfer_report(report, fs::path(tr_out) / "transfer_trials.csv",
                              fs::path(tr_out) / "transfer_summary.csv");
        for (const auto& row : report.summary) {
          std::cout << "k=" << row.k << " median MAPE: time " << row.time_mape.median << "%, power "
                    << row.power_mape.median << "%\n";
        }
      }
    } else if (predict_cmd->parsed()) {
      const DeviceGrid grid = load_grid(pr_grid);
      grid.check(pr_mode);
      const auto models = load_models(pr_models);
      const auto p = predict(models, pr_mode);
      if (pr_json) {
        std::cout << json{{"mode", mode_json(pr_mode)}, {"pred_time_ms", p.time_ms}, {"pred_power_mw", p.power_mw}}
                         .dump(2)
                  << '\n';
      } else {
        std::cout << to_string(pr_mode) << ": " << p.time_ms << " ms per minibatch, " << p.power_mw << " mW\n";
      }
    } else if (sweep->parsed()) {
      const DeviceGrid grid = load_grid(sw_grid);
      const auto models = load_models(sw_models);
      const auto points = predict_sweep(models, make_space(grid, sw_space), sw_threads);
      write_sweep_csv(points, sw_out);
      std::cout << "predicted " << points.size() << " modes into " << sw_out << '\n';
    } else if (pareto->parsed()) {
      const auto front = build_front(read_points_csv(pa_in));
      write_front_csv(front, pa_out);
      std::cout << "front: " << front.size() << " points written to " << pa_out << '\n';
      if (pa_verbose) {
        for (const auto& [mode, alts] : front.alternates) {
          std::cout << to_string(mode) << " ties with";
          for (const auto& a : alts) std::cout << ' ' << to_string(a);
          std::cout << '\n';
        }
      }
    } else if (optimize_cmd->parsed()) {
      const Budget budget = Budget::parse(op_budget);
      if (op_truth.given()) op_truth.check();
      const auto front = build_front(read_points_csv(op_front));
      const TradeoffPoint& pick = optimize(front, budget);
      json out{{"budget_mw", budget.power_limit_mw}, {"mode", mode_json(pick.mode)}};
      out[pick.source == PointSource::predicted ? "predicted" : "front"] = {{"time_ms", pick.time_ms},
                                                                             {"power_mw", pick.power_mw}};
      std::optional<ProfiledPoint> observed;
      if (op_truth.given()) {
        const Corpus truth = op_truth.load();
        observed = truth.at(pick.mode);
        out["observed"] = {{"time_ms", observed->time_ms}, {"power_mw", observed->power_mw}};
      }
      if (op_samples > 0) {
        const EpochSpec spec{op_samples, op_batch};
        const double secs = epoch_time(observed ? observed->time_ms : pick.time_ms, spec);
        const double power = observed ? observed->power_mw : pick.power_mw;
        out["epoch_time_s"] = secs;
        out["epoch_energy_mwh"] = energy_mwh(power, secs / 3600.0);
      }
      if (op_json) {
        std::cout << out.dump(2) << '\n';
      } else {
        std::cout << "budget " << budget.power_limit_mw << " mW -> " << to_string(pick.mode) << '\n';
        std::cout << "  " << to_string(pick.source) << ": " << pick.time_ms << " ms per minibatch, " << pick.power_mw
                  << " mW\n";
        if (observed) {
          std::cout << "  observed: " << observed->time_ms << " ms per minibatch, " << observed->power_mw << " mW\n";
        }
        if (out.contains("epoch_time_s")) {
          std::cout << "  epoch: " << out["epoch_time_s"].get<double>() << " s, "
                    << out["epoch_energy_mwh"].get<double>() << " mWh\n";
        }
      }
    } else if (evaluate->parsed()) {
      ev_truth.check();
      SweepConfig sweep_cfg{parse_budgets(ev_budgets)};
      sweep_cfg.validate();
      const std::uint64_t seed = ev_seed.resolve();
      std::vector<WorkloadModels> loaded;
      loaded.reserve(ev_strategies.size());
      std::vector<StrategySpec> specs;
      for (const auto& s : ev_strategies) {
        const auto colon = s.find(':');
        const std::string name = s.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
        StrategySpec spec;
        spec.label = s;
        spec.seed = seed;
        if (name == "oracle") {
          spec.kind = StrategyKind::oracle;
        } else if (name == "maxn") {
          spec.kind = StrategyKind::maxn;
        } else if (name == "rnd") {
          spec.kind = StrategyKind::rnd;
          if (!arg.empty()) spec.k = std::stoul(arg);
          spec.label = "rnd_" + std::to_string(spec.k);
        } else if (name == "powertrain" || name == "nn") {
          if (arg.empty()) throw DataError("strategy " + name + " needs a model directory, e.g. " + name + ":models");
          spec.kind = name == "nn" ? StrategyKind::nn : StrategyKind::powertrain;
          loaded.push_back(load_models(arg));
          spec.models = &loaded.back();
        } else {
          throw DataError("unknown strategy '" + s + "'");
        }
        specs.push_back(spec);
      }
      const Corpus truth = ev_truth.load();
      std::vector<MetricsReport> reports;
      for (const auto& spec : specs) reports.push_back(run_strategy(spec, truth, sweep_cfg));
      json j{{"seed", seed}, {"strategies", report_json(reports)}};
      if (!ev_out_json.empty()) write_json(j, ev_out_json);
      if (!ev_out_csv.empty()) write_report_csv(reports, ev_out_csv);
      if (ev_json) {
        std::cout << j.dump(2) << '\n';
      } else {
        print_seed(seed);
        for (const auto& r : reports) {
          std::cout << r.strategy << ": median time penalty " << r.median_time_penalty_pct << "% (Q1 "
                    << r.time_penalty_pct.q1 << ", Q3 " << r.time_penalty_pct.q3 << "), excess power AUC "
                    << r.power.excess_auc_w << " W/solution, A/L " << r.power.a_l_pct << "%, A/L+1 "
                    << r.power.a_l_plus1_pct << "%, infeasible " << r.infeasible << '\n';
        }
      }
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
