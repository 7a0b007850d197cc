#include "powertrain/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "csv.hpp"
#include "powertrain/error.hpp"

namespace powertrain {

double mape(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size()) {
    throw DataError("mape: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(actuals.size()) + " actuals");
  }
  if (actuals.empty()) throw DataError("mape: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (actuals[i] == 0.0) throw DataError("mape: actual value of 0 at index " + std::to_string(i));
    total += std::abs(predictions[i] - actuals[i]) / std::abs(actuals[i]);
  }
  return 100.0 * total / static_cast<double>(actuals.size());
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw DataError("quartiles of an empty set");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

SweepConfig SweepConfig::standard() { return range(17000.0, 50000.0, 1000.0); }

SweepConfig SweepConfig::range(double first_mw, double last_mw, double step_mw) {
  if (!(step_mw > 0.0) || !(first_mw > 0.0) || last_mw < first_mw) {
    throw DataError("budget sweep needs 0 < first <= last and a positive step");
  }
  SweepConfig s;
  const auto n = static_cast<long>(std::floor((last_mw - first_mw) / step_mw + 1e-9));
  for (long i = 0; i <= n; ++i) s.budgets_mw.push_back(first_mw + static_cast<double>(i) * step_mw);
  return s;
}

void SweepConfig::validate() const {
  if (budgets_mw.empty()) throw DataError("budget sweep is empty");
  for (std::size_t i = 0; i < budgets_mw.size(); ++i) {
    if (!(budgets_mw[i] > 0.0)) throw DataError("budgets must be positive");
    if (i > 0 && !(budgets_mw[i] > budgets_mw[i - 1])) throw DataError("budgets must be strictly ascending");
  }
}

std::string to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::ok: return "ok";
    case OutcomeStatus::strategy_infeasible: return "strategy_infeasible";
    case OutcomeStatus::truth_infeasible: return "truth_infeasible";
  }
  return "ok";
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::oracle: return "oracle";
    case StrategyKind::powertrain: return "powertrain";
    case StrategyKind::nn: return "nn";
    case StrategyKind::rnd: return "rnd";
    case StrategyKind::maxn: return "maxn";
  }
  return "oracle";
}

double time_penalty(const StrategyOutcome& o) {
  return 100.0 * (o.observed_time_ms - o.optimal_time_ms) / o.optimal_time_ms;
}

PowerMetrics power_metrics(std::span<const StrategyOutcome> outcomes) {
  if (outcomes.empty()) throw DataError("power_metrics: no outcomes");
  double excess = 0.0;
  std::size_t over = 0, over_plus1 = 0;
  for (const auto& o : outcomes) {
    excess += std::max(0.0, o.observed_power_mw - o.budget_mw);
    if (o.observed_power_mw > o.budget_mw) ++over;
    if (o.observed_power_mw > o.budget_mw + 1000.0) ++over_plus1;
  }
  const auto n = static_cast<double>(outcomes.size());
  return {excess / n / 1000.0, 100.0 * static_cast<double>(over) / n, 100.0 * static_cast<double>(over_plus1) / n};
}

namespace {

PowerMode corpus_maxn(const Corpus& truth) {
  PowerMode m{0, 0, 0, 0};
  for (const auto& [mode, p] : truth.points) {
    m.cores = std::max(m.cores, mode.cores);
    m.cpu_mhz = std::max(m.cpu_mhz, mode.cpu_mhz);
    m.gpu_mhz = std::max(m.gpu_mhz, mode.gpu_mhz);
    m.mem_mhz = std::max(m.mem_mhz, mode.mem_mhz);
  }
  if (!truth.contains(m)) throw DataError("ground truth does not cover the MAXN mode " + to_string(m));
  return m;
}

}  // namespace

MetricsReport run_strategy(const StrategySpec& spec, const Corpus& truth, const SweepConfig& sweep) {
  sweep.validate();
  if (truth.empty()) throw DataError("ground-truth corpus is empty");
  const ParetoFront truth_front = build_front(observed_points(truth));

  std::optional<ParetoFront> front;
  std::optional<PowerMode> fixed;
  switch (spec.kind) {
    case StrategyKind::oracle:
      front = truth_front;
      break;
    case StrategyKind::powertrain:
    case StrategyKind::nn:
      if (spec.models == nullptr) throw DataError(to_string(spec.kind) + " strategy needs trained models");
      front = build_front(predict_sweep(*spec.models, truth.modes()));
      break;
    case StrategyKind::rnd: {
      PowerModeSpace sample = sample_random(truth.modes(), spec.k, spec.seed);
      front = build_front(observed_points(truth.subset(sample)));
      break;
    }
    case StrategyKind::maxn:
      fixed = corpus_maxn(truth);
      break;
  }

  MetricsReport report;
  report.strategy = spec.label.empty() ? to_string(spec.kind) : spec.label;
  std::vector<StrategyOutcome> feasible;
  for (double budget : sweep.budgets_mw) {
    StrategyOutcome o;
    o.budget_mw = budget;
    const TradeoffPoint* optimal = nullptr;
    try {
      optimal = &optimize(truth_front, Budget{budget});
    } catch (const InfeasibleError&) {
      o.status = OutcomeStatus::truth_infeasible;
    }
    if (optimal != nullptr) {
      o.optimal_time_ms = optimal->time_ms;
      o.optimal_power_mw = optimal->power_mw;
      if (fixed) {
        o.chosen = *fixed;
      } else {
        try {
          const TradeoffPoint& pick = optimize(*front, Budget{budget});
          o.chosen = pick.mode;
          if (pick.source == PointSource::predicted) {
            o.predicted_time_ms = pick.time_ms;
            o.predicted_power_mw = pick.power_mw;
          }
        } catch (const InfeasibleError&) {
          o.status = OutcomeStatus::strategy_infeasible;
        }
      }
    }
    if (o.status == OutcomeStatus::ok) {
      if (!truth.contains(o.chosen)) {
        throw DataError("strategy " + report.strategy + " chose " + to_string(o.chosen) +
                        ", which the ground truth does not cover");
      }
      const auto& obs = truth.at(o.chosen);
      o.observed_time_ms = obs.time_ms;
      o.observed_power_mw = obs.power_mw;
      feasible.push_back(o);
    } else {
      ++report.infeasible;
    }
    report.outcomes.push_back(o);
  }

  report.feasible = feasible.size();
  if (feasible.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.median_time_penalty_pct = nan;
    report.time_penalty_pct = {nan, nan, nan};
  } else {
    std::vector<double> penalties;
    for (const auto& o : feasible) penalties.push_back(time_penalty(o));
    report.time_penalty_pct = quartiles(penalties);
    report.median_time_penalty_pct = report.time_penalty_pct.median;
    report.power = power_metrics(feasible);
  }
  return report;
}

nlohmann::json report_json(const std::vector<MetricsReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : r.outcomes) {
      nlohmann::json row = {{"budget_mw", o.budget_mw}, {"status", to_string(o.status)}};
      if (o.status != OutcomeStatus::truth_infeasible) {
        row["optimal"] = {{"time_ms", o.optimal_time_ms}, {"power_mw", o.optimal_power_mw}};
      }
      if (o.status == OutcomeStatus::ok) {
        row["mode"] = {{"cores", o.chosen.cores},
                       {"cpu_mhz", o.chosen.cpu_mhz},
                       {"gpu_mhz", o.chosen.gpu_mhz},
                       {"mem_mhz", o.chosen.mem_mhz}};
        row["observed"] = {{"time_ms", o.observed_time_ms}, {"power_mw", o.observed_power_mw}};
        if (o.predicted_time_ms) {
          row["predicted"] = {{"time_ms", *o.predicted_time_ms}, {"power_mw", *o.predicted_power_mw}};
        }
        row["time_penalty_pct"] = time_penalty(o);
      }
      outcomes.push_back(row);
    }
    out.push_back({{"strategy", r.strategy},
                   {"median_time_penalty_pct", r.median_time_penalty_pct},
                   {"time_penalty_q1_pct", r.time_penalty_pct.q1},
                   {"time_penalty_q3_pct", r.time_penalty_pct.q3},
                   {"excess_power_auc_w_per_solution", r.power.excess_auc_w},
                   {"exceed_rate_pct", r.power.a_l_pct},
                   {"exceed_rate_plus1_pct", r.power.a_l_plus1_pct},
                   {"feasible_budgets", r.feasible},
                   {"infeasible_budgets", r.infeasible},
                   {"mape_basis", "mode_aggregate"},
                   {"outcomes", outcomes}});
  }
  return out;
}

void write_report_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "strategy,budget_mw,status,cores,cpu_mhz,gpu_mhz,mem_mhz,pred_time_ms,pred_power_mw,obs_time_ms,"
         "obs_power_mw,opt_time_ms,opt_power_mw,time_penalty_pct\n";
  for (const auto& r : reports) {
    for (const auto& o : r.outcomes) {
      out << r.strategy << ',' << csv::number(o.budget_mw) << ',' << to_string(o.status) << ',';
      if (o.status == OutcomeStatus::ok) {
        out << o.chosen.cores << ',' << o.chosen.cpu_mhz << ',' << o.chosen.gpu_mhz << ',' << o.chosen.mem_mhz << ','
            << (o.predicted_time_ms ? csv::number(*o.predicted_time_ms) : "") << ','
            << (o.predicted_power_mw ? csv::number(*o.predicted_power_mw) : "") << ','
            << csv::number(o.observed_time_ms) << ',' << csv::number(o.observed_power_mw) << ','
            << csv::number(o.optimal_time_ms) << ',' << csv::number(o.optimal_power_mw) << ','
            << csv::number(time_penalty(o)) << '\n';
      } else if (o.status == OutcomeStatus::strategy_infeasible) {
        out << ",,,,,,,," << csv::number(o.optimal_time_ms) << ',' << csv::number(o.optimal_power_mw) << ",\n";
      } else {
        out << ",,,,,,,,,,\n";
      }
    }
  }
}

}  // namespace powertrain
