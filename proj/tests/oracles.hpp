#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "powertrain/evaluation.hpp"
#include "powertrain/pareto.hpp"

// Deliberately naive re-implementations used as test oracles.
namespace testing {

// O(n^2) dominance filter; of exact duplicates the canonically smallest mode
// survives. Sorted by power.
inline std::vector<powertrain::TradeoffPoint> brute_front(const std::vector<powertrain::TradeoffPoint>& pts) {
  std::vector<powertrain::TradeoffPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      if (i == j) continue;
      const auto& a = pts[i];
      const auto& b = pts[j];
      const bool dominates = b.time_ms <= a.time_ms && b.power_mw <= a.power_mw &&
                             (b.time_ms < a.time_ms || b.power_mw < a.power_mw);
      const bool earlier_twin = b.time_ms == a.time_ms && b.power_mw == a.power_mw && b.mode < a.mode;
      if (dominates || earlier_twin) keep = false;
    }
    if (keep) out.push_back(pts[i]);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.power_mw < b.power_mw; });
  return out;
}

// Fastest point under the budget, scanning everything.
inline std::optional<powertrain::TradeoffPoint> brute_argmin(const std::vector<powertrain::TradeoffPoint>& pts,
                                                             double budget_mw) {
  std::optional<powertrain::TradeoffPoint> best;
  for (const auto& p : pts) {
    if (p.power_mw > budget_mw) continue;
    if (!best || p.time_ms < best->time_ms ||
        (p.time_ms == best->time_ms && p.power_mw < best->power_mw) ||
        (p.time_ms == best->time_ms && p.power_mw == best->power_mw && p.mode < best->mode)) {
      best = p;
    }
  }
  return best;
}

// Points on a coarse lattice so ties in time, power and both are common.
inline std::vector<powertrain::TradeoffPoint> random_points(std::size_t n, std::mt19937_64& rng, int lattice = 50) {
  std::uniform_int_distribution<int> coord(1, lattice);
  std::vector<powertrain::TradeoffPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    pts.push_back({{id % 12 + 1, id / 12 + 1, 1, 1}, double(coord(rng)), double(coord(rng)) * 100.0,
                   powertrain::PointSource::predicted});
  }
  std::shuffle(pts.begin(), pts.end(), rng);
  return pts;
}

inline double brute_mape(const std::vector<double>& p, const std::vector<double>& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::fabs(p[i] - a[i]) / std::fabs(a[i]);
  return sum / double(p.size()) * 100.0;
}

inline double brute_penalty(double observed, double optimal) { return (observed / optimal - 1.0) * 100.0; }

struct BrutePower {
  double auc_w = 0.0;
  double a_l = 0.0;
  double a_l1 = 0.0;
};

inline BrutePower brute_power(const std::vector<powertrain::StrategyOutcome>& outs) {
  BrutePower r;
  double excess = 0.0;
  int over = 0, over1 = 0;
  for (const auto& o : outs) {
    if (o.observed_power_mw > o.budget_mw) {
      excess += o.observed_power_mw - o.budget_mw;
      ++over;
    }
    if (o.observed_power_mw - o.budget_mw > 1000.0) ++over1;
  }
  r.auc_w = excess / 1000.0 / double(outs.size());
  r.a_l = 100.0 * over / double(outs.size());
  r.a_l1 = 100.0 * over1 / double(outs.size());
  return r;
}

}  // namespace testing
