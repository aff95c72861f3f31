#pragma once

// Domain types shared by every solver: scenarios, investors, system
// parameters, decision profiles and the mechanism price functions.
//
// Units are fixed: MW for power, MWh for energy, $ for money, one-hour
// steps. Costs and profits are expected values per operating day.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridmech/hourly_table.hpp"

namespace gridmech {

struct HourGrid {
  std::size_t hours_per_day = 24;
  std::size_t scenario_count = 1;
};

/// One representative operating day.
struct Scenario {
  std::string label;
  double probability = 0.0;
  std::vector<double> demand;         // MW
  std::vector<double> cer_slope;      // $/MWh per MW of CER output
  std::vector<double> cer_intercept;  // $/MWh
  std::vector<double> no_load_cost;   // $; carried through, never optimized
  std::map<std::string, std::vector<double>> capacity_factors;

  double cer_marginal_cost(std::size_t t, double output) const {
    return cer_slope[t] * output + cer_intercept[t];
  }
};

/// Probability-weighted set of operating days. The constructor enforces
/// sum(probability) == 1 within 1e-9 and consistent hour counts.
class ScenarioSet {
 public:
  static constexpr double kProbabilityTolerance = 1e-9;

  ScenarioSet() = default;
  ScenarioSet(std::size_t hours_per_day, std::vector<Scenario> scenarios);

  /// Rescales positive weights to probabilities before validating.
  static ScenarioSet normalized(std::size_t hours_per_day, std::vector<Scenario> scenarios);

  std::size_t hours() const noexcept { return hours_; }
  std::size_t size() const noexcept { return scenarios_.size(); }
  HourGrid grid() const noexcept { return {hours_, scenarios_.size()}; }
  const Scenario& operator[](std::size_t w) const { return scenarios_[w]; }
  std::span<const Scenario> scenarios() const noexcept { return scenarios_; }

  HourlyTable demand_table() const;
  HourlyTable slope_table() const;
  HourlyTable intercept_table() const;

  /// Copy with intercept b[w][t] += shift(w, t).
  ScenarioSet with_intercept_shift(const HourlyTable& shift) const;

 private:
  std::size_t hours_ = 0;
  std::vector<Scenario> scenarios_;
};

struct VreSpec {
  std::string id;
  double capacity_cost = 0.0;  // $/MW
  double scale_factor = 0.0;   // 1/day, capital cost to one day
  std::string capacity_factor_key;
};

struct EsSpec {
  std::string id;
  double energy_cost = 0.0;     // $/MWh of energy capacity
  double power_cost = 0.0;      // $/MW of power capacity
  double charge_cost = 0.0;     // $/MWh charged
  double discharge_cost = 0.0;  // $/MWh discharged
  double charge_efficiency = 1.0;
  double discharge_efficiency = 1.0;
  double min_duration = 1.0;  // h, lower bound on energy/power
  double max_duration = 1.0;  // h
  double scale_factor = 0.0;  // 1/day
};

inline constexpr double kDefaultVreLifetimeYears = 25.0;
inline constexpr double kDefaultEsLifetimeYears = 10.0;

/// r(1+r)^L / ((1+r)^L - 1); tends to 1/L as r -> 0.
double capital_recovery_factor(double rate, double years);

/// Capital-recovery factor spread over 365 days.
double daily_scale_factor(double rate, double years);

struct SystemParams {
  double initial_cer_capacity = 0.0;  // MW
  double remaining_fraction = 1.0;    // share of CER capacity not retired
  double voll = 0.0;                  // $/MWh
  bool allow_low_voll = false;

  double remaining_capacity() const { return remaining_fraction * initial_cer_capacity; }
};

enum class MechanismKind { Mcp, P, Pi, Piu };

std::string_view to_string(MechanismKind kind);
MechanismKind parse_mechanism(std::string_view text);

struct MechanismSpec {
  MechanismKind kind = MechanismKind::Mcp;
  HourlyTable uplift;  // $/MWh, empty means zero; non-zero only for PIU

  double uplift_at(std::size_t w, std::size_t t) const { return uplift.value_or_zero(w, t); }
};

enum class InvestorClass { Vre, Es };

struct InvestorRef {
  InvestorClass cls = InvestorClass::Vre;
  std::size_t index = 0;
  friend bool operator==(const InvestorRef&, const InvestorRef&) = default;
};

/// Scenario set, investor fleet, CER system and mechanism: the full problem
/// statement. Immutable after construction; `with_*` return modified copies.
class MarketInstance {
 public:
  MarketInstance() = default;
  MarketInstance(ScenarioSet scenarios, std::vector<VreSpec> vre, std::vector<EsSpec> es,
                 SystemParams system, MechanismSpec mechanism = {});

  const ScenarioSet& scenarios() const noexcept { return scenarios_; }
  std::span<const VreSpec> vre() const noexcept { return vre_; }
  std::span<const EsSpec> es() const noexcept { return es_; }
  const SystemParams& system() const noexcept { return system_; }
  const MechanismSpec& mechanism() const noexcept { return mechanism_; }

  std::size_t hours() const noexcept { return scenarios_.hours(); }
  std::size_t scenario_count() const noexcept { return scenarios_.size(); }

  /// Investors are ordered VRE first, then ES.
  std::size_t investor_count() const noexcept { return vre_.size() + es_.size(); }
  InvestorRef investor(std::size_t k) const;
  std::size_t ordinal(InvestorRef ref) const;
  const std::string& investor_id(InvestorRef ref) const;
  double scale_factor(InvestorRef ref) const;
  InvestorRef find_investor(std::string_view id) const;

  /// nu_i[t] for scenario w.
  std::span<const double> capacity_factors(std::size_t vre_index, std::size_t w) const;

  /// Max over (w, t) of the CER marginal cost at remaining capacity.
  double max_capped_marginal_cost() const;

  MarketInstance with_scenarios(ScenarioSet scenarios) const;
  MarketInstance with_system(SystemParams system) const;
  MarketInstance with_mechanism(MechanismSpec mechanism) const;
  MarketInstance with_investors(std::vector<VreSpec> vre, std::vector<EsSpec> es) const;

 private:
  void validate() const;

  ScenarioSet scenarios_;
  std::vector<VreSpec> vre_;
  std::vector<EsSpec> es_;
  SystemParams system_;
  MechanismSpec mechanism_;
};

struct VreDecision {
  std::string id;
  double capacity = 0.0;
  HourlyTable market;     // MW sold
  HourlyTable curtailed;  // MW
  HourlyTable lost_load_share;  // MW; empty outside P/PI/PIU
};

struct EsDecision {
  std::string id;
  double energy_capacity = 0.0;
  double power_capacity = 0.0;
  HourlyTable charge;
  HourlyTable discharge;
  HourlyTable state_of_charge;  // end-of-hour; the start-of-day level equals hour T
  HourlyTable lost_load_share;
};

/// Decisions of every investor plus the operator's CER dispatch and
/// aggregate lost load.
struct DecisionProfile {
  std::vector<VreDecision> vre;
  std::vector<EsDecision> es;
  HourlyTable cer_output;
  HourlyTable lost_load;

  bool has_lost_load_allocation() const;
};

/// Zero profile shaped for `instance`.
DecisionProfile zero_profile(const MarketInstance& instance, bool with_lost_load_allocation);

enum class SupplyBasis { Market, WithLostLoad };

/// VRE: market sales; ES: discharge - charge. `WithLostLoad` adds the
/// investor's allocated lost load.
double net_supply(const DecisionProfile& profile, InvestorRef ref, std::size_t w,
                  std::size_t t, SupplyBasis basis = SupplyBasis::Market);
double net_supply(const DecisionProfile& profile, std::string_view id, std::size_t w,
                  std::size_t t, SupplyBasis basis = SupplyBasis::Market);
double total_net_supply(const DecisionProfile& profile, std::size_t w, std::size_t t,
                        SupplyBasis basis = SupplyBasis::Market);

/// Price capped at the CER marginal cost at remaining capacity, plus uplift.
/// Throws InfeasibleSupplyError when total_supply exceeds demand by more
/// than `tolerance`.
double capped_price(double total_supply, const Scenario& scenario, std::size_t t,
                    const SystemParams& system, double uplift, double tolerance = 1e-7);

/// Balance-row shadow price scaled by the scenario probability.
double mcp_price(double balance_dual, double probability);

// Cost accounting from primitive formulas. All values are $/day expectations.
double investment_cost(const MarketInstance& instance, const DecisionProfile& profile,
                       InvestorRef ref);
double operating_cost(const MarketInstance& instance, const DecisionProfile& profile,
                      InvestorRef ref);
/// Expected CER cost with the instance's own intercepts; no-load cost excluded.
double cer_cost(const MarketInstance& instance, const DecisionProfile& profile);
double lost_load_cost(const MarketInstance& instance, const DecisionProfile& profile);
double system_cost(const MarketInstance& instance, const DecisionProfile& profile);

/// Max-abs difference over physical decisions (capacities, dispatch, CER
/// output, aggregate lost load); the lost-load split is ignored.
double max_decision_difference(const DecisionProfile& a, const DecisionProfile& b);

/// Same profile with VRE sales in each hour split in proportion to available
/// output (capacity times capacity factor), totals unchanged. Where VRE sales
/// are interchangeable in the objective (planning problem, PI and PIU) every
/// split is optimal; this picks a canonical one.
DecisionProfile with_pro_rata_sales(const MarketInstance& instance, DecisionProfile profile);

struct HourIndex {
  std::size_t scenario = 0;
  std::size_t hour = 0;
  std::string investor;
};

/// (w, t) pairs where an ES unit charges and discharges at once.
std::vector<HourIndex> simultaneous_charge_hours(const DecisionProfile& profile,
                                                 double threshold = 1e-8);

}  // namespace gridmech
