#pragma once

// Nash equilibria of the investment game under the MCP, P, PI and PIU
// mechanisms.

#include <optional>
#include <string>
#include <vector>

#include "gridmech/model.hpp"
#include "gridmech/qp.hpp"
#include "gridmech/verification.hpp"

namespace gridmech {

/// Gross cash flows of one investor, $/day expectations.
struct InvestorAccount {
  std::string id;
  double market_revenue = 0.0;     // price * A
  double lost_load_revenue = 0.0;  // price * allocated lost load
  double investment_cost = 0.0;
  double operating_cost = 0.0;
  double penalty = 0.0;    // VOLL * allocated lost load
  double incentive = 0.0;  // 1/2 a (supply incl. lost load)^2
  double profit = 0.0;

  double recomputed_profit() const {
    return market_revenue + lost_load_revenue - investment_cost - operating_cost - penalty +
           incentive;
  }
};

struct EquilibriumReport {
  MechanismKind mechanism = MechanismKind::Mcp;
  /// "potential-maximizer", "social-optimum" or "withholding". The first
  /// marks one equilibrium among possibly many.
  std::string selection;
  DecisionProfile profile;
  HourlyTable prices;
  HourlyTable uplift;  // empty unless PIU
  std::vector<InvestorAccount> accounts;
  double system_cost = 0.0;        // with the instance's own intercepts
  double shifted_objective = 0.0;  // PIU: cost with intercepts raised by the uplift
  double potential = 0.0;          // P: potential-function value at the solution
  std::optional<NashCertificate> certificate;

  // Withholding outcome only.
  bool condition_holds = true;
  double epsilon_bound = 0.0;
  HourlyTable epsilon;

  std::vector<std::string> notes;

  double total_profit() const;
};

struct EquilibriumOptions {
  qp::Settings settings{1e-12, 1e-12, 1e-12, 200, true};
  /// Multiplies every investment cost in the assembled problem. Test hook
  /// for mutation checks; leave at 1.
  double investment_cost_scale = 1.0;
};

/// Profile, prices and accounts for a P/PI/PIU equilibrium, computed with
/// the mechanism in `instance.mechanism()`.
EquilibriumReport solve_p_equilibrium(const MarketInstance& instance,
                                      const EquilibriumOptions& options = {});
EquilibriumReport solve_pi_equilibrium(const MarketInstance& instance,
                                       const EquilibriumOptions& options = {});
EquilibriumReport solve_piu_equilibrium(const MarketInstance& instance,
                                        const EquilibriumOptions& options = {});

/// Shadow-price market under perfect competition: the cost-minimizing plan
/// priced at lambda / rho.
EquilibriumReport solve_mcp_competitive(const MarketInstance& instance,
                                        const EquilibriumOptions& options = {});

/// Default margin: 1e-3 * (D - remaining CER capacity).
HourlyTable default_withholding_margin(const MarketInstance& instance);

/// Symmetric withholding outcome of homogeneous VRE investors. An empty
/// `epsilon` uses the default margin.
EquilibriumReport solve_mcp_withholding(const MarketInstance& instance,
                                        const HourlyTable& epsilon = {},
                                        const EquilibriumOptions& options = {});

/// Dispatches on `instance.mechanism().kind`; MCP maps to the withholding
/// outcome unless `competitive_mcp` is set.
EquilibriumReport solve_equilibrium(const MarketInstance& instance, bool competitive_mcp = false,
                                    const EquilibriumOptions& options = {});

/// Copy of `instance` under PIU with the same uplift at every hour.
MarketInstance with_uniform_uplift(const MarketInstance& instance, double uplift);

struct BreakEven {
  double uplift = 0.0;        // $/MWh
  double total_profit = 0.0;  // at `uplift`
  int evaluations = 0;
};

/// Bisection on a uniform PIU uplift in [lo, hi] until total investor profit
/// is within `profit_tol`. Throws ParameterError when the profit does not
/// change sign on the bracket.
BreakEven break_even_uplift(const MarketInstance& instance, double lo, double hi,
                            double profit_tol = 1.0, const EquilibriumOptions& options = {});

/// Each investor copied `copies` times; ids get a "#k" suffix when copies > 1.
MarketInstance replicate(const MarketInstance& instance, std::size_t copies);
MarketInstance replicate(const MarketInstance& instance, std::size_t vre_copies,
                         std::size_t es_copies);

/// E sum_t 1/2 a (supply incl. lost load)^2 for one investor.
double quadratic_supply_term(const MarketInstance& instance, const DecisionProfile& profile,
                             std::size_t investor);

/// E sum_t (1/2 a D^2 + b D): the constant that turns the potential into
/// minus a cost.
double potential_constant(const MarketInstance& instance);

}  // namespace gridmech
