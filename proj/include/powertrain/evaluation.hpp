#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "powertrain/metrics.hpp"
#include "powertrain/pareto.hpp"
#include "powertrain/predictor.hpp"
#include "powertrain/telemetry.hpp"

namespace powertrain {

struct SweepConfig {
  std::vector<double> budgets_mw;

  // 17 W to 50 W in 1 W steps.
  static SweepConfig standard();
  static SweepConfig range(double first_mw, double last_mw, double step_mw);
  void validate() const;
};

enum class OutcomeStatus {
  ok,
  strategy_infeasible,  // the strategy's own front has nothing under the budget
  truth_infeasible,     // no observed mode fits the budget
};

std::string to_string(OutcomeStatus s);

struct StrategyOutcome {
  double budget_mw = 0.0;
  OutcomeStatus status = OutcomeStatus::ok;
  PowerMode chosen;
  std::optional<double> predicted_time_ms;
  std::optional<double> predicted_power_mw;
  double observed_time_ms = 0.0;
  double observed_power_mw = 0.0;
  double optimal_time_ms = 0.0;
  double optimal_power_mw = 0.0;
};

// 100 * (observed - optimal) / optimal
double time_penalty(const StrategyOutcome& outcome);

struct PowerMetrics {
  double excess_auc_w = 0.0;  // mean excess over budget, W per solution
  double a_l_pct = 0.0;
  double a_l_plus1_pct = 0.0;
};

// Throws DataError on empty input.
PowerMetrics power_metrics(std::span<const StrategyOutcome> outcomes);

enum class StrategyKind { oracle, powertrain, nn, rnd, maxn };

std::string to_string(StrategyKind k);

struct StrategySpec {
  StrategyKind kind = StrategyKind::oracle;
  std::string label;
  // powertrain and nn
  const WorkloadModels* models = nullptr;
  // rnd
  std::size_t k = 50;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  std::string strategy;
  double median_time_penalty_pct = 0.0;  // NaN when no budget was feasible
  Quartiles time_penalty_pct;
  PowerMetrics power;
  std::size_t feasible = 0;
  std::size_t infeasible = 0;
  std::vector<StrategyOutcome> outcomes;
};

// Runs one strategy over every budget and scores chosen modes against the
// observed optimum. Throws DataError when a chosen mode is missing from truth.
MetricsReport run_strategy(const StrategySpec& spec, const Corpus& truth, const SweepConfig& sweep);

nlohmann::json report_json(const std::vector<MetricsReport>& reports);
void write_report_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path);

}  // namespace powertrain
