#include "gridmech/social_optimum.hpp"

#include <cmath>
#include <sstream>

#include "assembly.hpp"
#include "gridmech/error.hpp"

namespace gridmech {

qp::Settings default_model_settings() { return {1e-12, 1e-12, 1e-12, 200, true}; }

qp::QuadraticProgram build_so(const MarketInstance& instance) {
  return detail::assemble_market(instance, {}).qp;
}

SoResult solve_so(const MarketInstance& instance, const qp::Settings& settings) {
  const auto mp = detail::assemble_market(instance, {});
  SoResult r;
  r.solution = qp::solve(mp.qp, settings);
  if (!r.solution.optimal()) {
    std::ostringstream os;
    os << "planning problem not solved: " << qp::to_string(r.solution.status) << " after "
       << r.solution.iterations << " iterations";
    throw SolverError(os.str());
  }
  r.solution = qp::minimum_norm_optimum(mp.qp, r.solution, settings);
  const auto& x = r.solution.x;
  r.profile = with_pro_rata_sales(instance, detail::read_profile(mp, instance, x));
  r.objective = r.solution.objective;
  r.system_cost = system_cost(instance, r.profile);

  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  r.balance_duals = HourlyTable(W, T);
  r.prices = HourlyTable(W, T);
  r.cer_lower_duals = HourlyTable(W, T);
  r.cer_upper_duals = HourlyTable(W, T);
  r.shed_lower_duals = HourlyTable(W, T);
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const double lambda = r.solution.row_duals[mp.balance[k]];
      r.balance_duals(w, t) = lambda;
      r.prices(w, t) = mcp_price(lambda, instance.scenarios()[w].probability);
      r.cer_lower_duals(w, t) = r.solution.lower_duals[mp.cer[k]];
      r.cer_upper_duals(w, t) = r.solution.upper_duals[mp.cer[k]];
      r.shed_lower_duals(w, t) = r.solution.lower_duals[mp.shed[k]];
    }
  return r;
}

MarketInstance apply_uplift(const MarketInstance& instance, const HourlyTable& uplift) {
  if (uplift.empty()) return instance;
  for (double v : uplift.values())
    if (!(v >= 0.0)) throw ParameterError("uplift must be non-negative");
  return instance.with_scenarios(instance.scenarios().with_intercept_shift(uplift));
}

MarketInstance apply_uplift(const MarketInstance& instance, double uplift) {
  return apply_uplift(instance,
                      HourlyTable(instance.scenario_count(), instance.hours(), uplift));
}

ProfitCheck zero_profit_check(const SoResult& so, const MarketInstance& instance) {
  ProfitCheck check;
  check.tolerance = 1e-4 * std::abs(so.system_cost);
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const InvestorRef ref = instance.investor(i);
    double revenue = 0.0;
    for (std::size_t w = 0; w < W; ++w) {
      double day = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        day += so.prices(w, t) * net_supply(so.profile, ref, w, t);
      revenue += instance.scenarios()[w].probability * day;
    }
    const double profit = revenue - investment_cost(instance, so.profile, ref) -
                          operating_cost(instance, so.profile, ref);
    check.ids.push_back(instance.investor_id(ref));
    check.profits.push_back(profit);
    if (std::abs(profit) > check.tolerance) check.passed = false;
  }
  return check;
}

}  // namespace gridmech
