#pragma once

// Joint investment and operation cost minimization, and the shadow-price
// (MCP) market built on it.

#include <string>
#include <vector>

#include "gridmech/model.hpp"
#include "gridmech/qp.hpp"

namespace gridmech {

/// Solver settings used by every model solve unless a caller overrides them.
qp::Settings default_model_settings();

struct SoResult {
  DecisionProfile profile;
  double system_cost = 0.0;     // evaluated with the instance's own intercepts
  double objective = 0.0;       // QP objective (equals system_cost)
  HourlyTable balance_duals;    // lambda, one per (w, t)
  HourlyTable prices;           // lambda / rho
  HourlyTable cer_lower_duals;  // multipliers of p_cv >= 0
  HourlyTable cer_upper_duals;  // multipliers of p_cv <= remaining capacity
  HourlyTable shed_lower_duals; // multipliers of p_sh >= 0
  qp::Solution solution;
};

/// Problem assembly. The balance row of hour (w, t) is stored as
/// -(sum A + p_cv + p_sh) = -D so that its dual is rho * marginal cost.
qp::QuadraticProgram build_so(const MarketInstance& instance);

/// Throws SolverError when the QP does not reach Optimal.
SoResult solve_so(const MarketInstance& instance,
                  const qp::Settings& settings = default_model_settings());

/// Copy with b[w][t] += uplift(w, t). Negative entries throw ParameterError.
MarketInstance apply_uplift(const MarketInstance& instance, const HourlyTable& uplift);
MarketInstance apply_uplift(const MarketInstance& instance, double uplift);

struct ProfitCheck {
  std::vector<std::string> ids;
  std::vector<double> profits;  // $/day at the shadow prices
  double tolerance = 0.0;       // 1e-4 * system cost
  bool passed = true;
};

/// Investor profits at the shadow prices of `so`.
ProfitCheck zero_profit_check(const SoResult& so, const MarketInstance& instance);

}  // namespace gridmech
