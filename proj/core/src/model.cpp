#include "gridmech/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "gridmech/error.hpp"

namespace gridmech {
namespace {

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_length(const std::vector<double>& v, std::size_t hours, const std::string& what,
                  const std::string& label) {
  if (v.size() != hours) {
    std::ostringstream os;
    os << "scenario '" << label << "': " << what << " has " << v.size() << " entries, expected "
       << hours;
    throw ModelError(os.str());
  }
  if (!finite_all(v)) throw ModelError("scenario '" + label + "': non-finite " + what);
}

void validate_scenarios(std::size_t hours, std::vector<Scenario>& scenarios) {
  if (hours == 0) throw ModelError("hours per day must be at least 1");
  if (scenarios.empty()) throw ModelError("scenario set is empty");
  double total = 0.0;
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    Scenario& s = scenarios[w];
    if (s.label.empty()) s.label = "s" + std::to_string(w);
    if (!(s.probability > 0.0) || !std::isfinite(s.probability))
      throw InvalidScenarioError("scenario '" + s.label + "' has non-positive probability");
    total += s.probability;
    check_length(s.demand, hours, "demand", s.label);
    check_length(s.cer_slope, hours, "slope", s.label);
    check_length(s.cer_intercept, hours, "intercept", s.label);
    if (s.no_load_cost.empty()) s.no_load_cost.assign(hours, 0.0);
    check_length(s.no_load_cost, hours, "no-load cost", s.label);
    for (double d : s.demand)
      if (d < 0.0) throw ModelError("scenario '" + s.label + "': negative demand");
    for (auto& [key, cf] : s.capacity_factors) {
      check_length(cf, hours, "capacity factor '" + key + "'", s.label);
      for (double v : cf)
        if (v < 0.0 || v > 1.0)
          throw ModelError("scenario '" + s.label + "': capacity factor '" + key +
                           "' outside [0, 1]");
    }
  }
  if (std::abs(total - 1.0) > ScenarioSet::kProbabilityTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "scenario probabilities sum to " << total << ", expected 1";
    throw InvalidScenarioError(os.str());
  }
}

HourlyTable tabulate(const ScenarioSet& set, std::vector<double> Scenario::*field) {
  HourlyTable out(set.size(), set.hours());
  for (std::size_t w = 0; w < set.size(); ++w) {
    const auto& v = set[w].*field;
    std::copy(v.begin(), v.end(), out.row(w).begin());
  }
  return out;
}

}  // namespace

ScenarioSet::ScenarioSet(std::size_t hours_per_day, std::vector<Scenario> scenarios)
    : hours_(hours_per_day), scenarios_(std::move(scenarios)) {
  validate_scenarios(hours_, scenarios_);
}

ScenarioSet ScenarioSet::normalized(std::size_t hours_per_day, std::vector<Scenario> scenarios) {
  double total = 0.0;
  for (const auto& s : scenarios) {
    if (!(s.probability > 0.0))
      throw InvalidScenarioError("scenario '" + s.label + "' has non-positive weight");
    total += s.probability;
  }
  for (auto& s : scenarios) s.probability /= total;
  return ScenarioSet(hours_per_day, std::move(scenarios));
}

HourlyTable ScenarioSet::demand_table() const { return tabulate(*this, &Scenario::demand); }
HourlyTable ScenarioSet::slope_table() const { return tabulate(*this, &Scenario::cer_slope); }
HourlyTable ScenarioSet::intercept_table() const {
  return tabulate(*this, &Scenario::cer_intercept);
}

ScenarioSet ScenarioSet::with_intercept_shift(const HourlyTable& shift) const {
  if (shift.empty()) return *this;
  if (shift.scenarios() != size() || shift.hours() != hours())
    throw ModelError("intercept shift has the wrong shape");
  ScenarioSet out = *this;
  for (std::size_t w = 0; w < size(); ++w)
    for (std::size_t t = 0; t < hours_; ++t) out.scenarios_[w].cer_intercept[t] += shift(w, t);
  return out;
}

double capital_recovery_factor(double rate, double years) {
  if (!(years > 0.0)) throw ParameterError("lifetime must be positive");
  if (rate < 0.0) throw ParameterError("discount rate must be non-negative");
  if (rate == 0.0) return 1.0 / years;
  // r / (1 - (1+r)^-n), written to stay accurate as r -> 0.
  return rate / -std::expm1(-years * std::log1p(rate));
}

double daily_scale_factor(double rate, double years) {
  return capital_recovery_factor(rate, years) / 365.0;
}

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::Mcp: return "mcp";
    case MechanismKind::P: return "p";
    case MechanismKind::Pi: return "pi";
    case MechanismKind::Piu: return "piu";
  }
  return "?";
}

MechanismKind parse_mechanism(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "mcp") return MechanismKind::Mcp;
  if (s == "p") return MechanismKind::P;
  if (s == "pi") return MechanismKind::Pi;
  if (s == "piu") return MechanismKind::Piu;
  throw ParameterError("unknown mechanism '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

MarketInstance::MarketInstance(ScenarioSet scenarios, std::vector<VreSpec> vre,
                               std::vector<EsSpec> es, SystemParams system,
                               MechanismSpec mechanism)
    : scenarios_(std::move(scenarios)),
      vre_(std::move(vre)),
      es_(std::move(es)),
      system_(system),
      mechanism_(std::move(mechanism)) {
  validate();
}

void MarketInstance::validate() const {
  if (scenarios_.size() == 0) throw ModelError("instance has no scenarios");
  const std::size_t T = hours();

  for (std::size_t w = 0; w < scenarios_.size(); ++w)
    for (double a : scenarios_[w].cer_slope)
      if (!(a > 0.0))
        throw ModelError("scenario '" + scenarios_[w].label + "': CER slope must be positive");

  std::set<std::string> ids;
  auto claim = [&](const std::string& id) {
    if (id.empty()) throw ModelError("investor id must not be empty");
    if (!ids.insert(id).second) throw ModelError("duplicate investor id '" + id + "'");
  };
  for (const auto& v : vre_) {
    claim(v.id);
    if (!(v.capacity_cost >= 0.0)) throw ModelError("VRE '" + v.id + "': negative capacity cost");
    if (!(v.scale_factor > 0.0)) throw ModelError("VRE '" + v.id + "': scale factor must be > 0");
    for (const auto& s : scenarios_.scenarios()) {
      auto it = s.capacity_factors.find(v.capacity_factor_key);
      if (it == s.capacity_factors.end())
        throw LookupError("VRE '" + v.id + "': capacity factor '" + v.capacity_factor_key +
                          "' missing in scenario '" + s.label + "'");
      if (it->second.size() != T) throw ModelError("capacity factor length mismatch");
    }
  }
  for (const auto& e : es_) {
    claim(e.id);
    if (!(e.charge_efficiency > 0.0 && e.charge_efficiency <= 1.0) ||
        !(e.discharge_efficiency > 0.0 && e.discharge_efficiency <= 1.0))
      throw ModelError("ES '" + e.id + "': efficiencies must lie in (0, 1]");
    if (!(e.min_duration > 0.0))
      throw ModelError("ES '" + e.id + "': minimum duration must be positive");
    if (e.min_duration > e.max_duration)
      throw ModelError("ES '" + e.id + "': minimum duration exceeds maximum duration");
    if (!(e.energy_cost >= 0.0 && e.power_cost >= 0.0 && e.charge_cost >= 0.0 &&
          e.discharge_cost >= 0.0))
      throw ModelError("ES '" + e.id + "': costs must be non-negative");
    if (!(e.scale_factor > 0.0)) throw ModelError("ES '" + e.id + "': scale factor must be > 0");
  }

  if (!(system_.initial_cer_capacity >= 0.0))
    throw ModelError("initial CER capacity must be non-negative");
  if (!(system_.remaining_fraction >= 0.0 && system_.remaining_fraction <= 1.0))
    throw ModelError("remaining CER fraction must lie in [0, 1]");
  if (!(system_.voll > 0.0) || !std::isfinite(system_.voll))
    throw ModelError("VOLL must be positive and finite");
  if (!system_.allow_low_voll && !(system_.voll > max_capped_marginal_cost())) {
    std::ostringstream os;
    os << "VOLL " << system_.voll << " does not exceed the CER marginal cost at remaining "
       << "capacity (" << max_capped_marginal_cost() << "); enable the low-VOLL regime to allow it";
    throw ModelError(os.str());
  }

  const auto& up = mechanism_.uplift;
  if (!up.empty()) {
    if (up.scenarios() != scenarios_.size() || up.hours() != T)
      throw ModelError("uplift table has the wrong shape");
    for (double v : up.values()) {
      if (!(v >= 0.0)) throw ParameterError("uplift must be non-negative");
      if (v != 0.0 && mechanism_.kind != MechanismKind::Piu)
        throw ModelError("a non-zero uplift requires the PIU mechanism");
    }
  }
}

InvestorRef MarketInstance::investor(std::size_t k) const {
  if (k < vre_.size()) return {InvestorClass::Vre, k};
  if (k < investor_count()) return {InvestorClass::Es, k - vre_.size()};
  throw LookupError("investor index out of range");
}

std::size_t MarketInstance::ordinal(InvestorRef ref) const {
  return ref.cls == InvestorClass::Vre ? ref.index : vre_.size() + ref.index;
}

const std::string& MarketInstance::investor_id(InvestorRef ref) const {
  return ref.cls == InvestorClass::Vre ? vre_.at(ref.index).id : es_.at(ref.index).id;
}

double MarketInstance::scale_factor(InvestorRef ref) const {
  return ref.cls == InvestorClass::Vre ? vre_.at(ref.index).scale_factor
                                       : es_.at(ref.index).scale_factor;
}

InvestorRef MarketInstance::find_investor(std::string_view id) const {
  for (std::size_t k = 0; k < vre_.size(); ++k)
    if (vre_[k].id == id) return {InvestorClass::Vre, k};
  for (std::size_t k = 0; k < es_.size(); ++k)
    if (es_[k].id == id) return {InvestorClass::Es, k};
  throw LookupError("unknown investor '" + std::string(id) + "'");
}

std::span<const double> MarketInstance::capacity_factors(std::size_t vre_index,
                                                         std::size_t w) const {
  return scenarios_[w].capacity_factors.at(vre_.at(vre_index).capacity_factor_key);
}

double MarketInstance::max_capped_marginal_cost() const {
  const double cap = system_.remaining_capacity();
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& s : scenarios_.scenarios())
    for (std::size_t t = 0; t < hours(); ++t) m = std::max(m, s.cer_marginal_cost(t, cap));
  return m;
}

MarketInstance MarketInstance::with_scenarios(ScenarioSet scenarios) const {
  MechanismSpec mech = mechanism_;
  if (!mech.uplift.empty() &&
      (mech.uplift.scenarios() != scenarios.size() || mech.uplift.hours() != scenarios.hours()))
    mech.uplift = {};
  return MarketInstance(std::move(scenarios), vre_, es_, system_, std::move(mech));
}

MarketInstance MarketInstance::with_system(SystemParams system) const {
  return MarketInstance(scenarios_, vre_, es_, system, mechanism_);
}

MarketInstance MarketInstance::with_mechanism(MechanismSpec mechanism) const {
  return MarketInstance(scenarios_, vre_, es_, system_, std::move(mechanism));
}

MarketInstance MarketInstance::with_investors(std::vector<VreSpec> vre,
                                              std::vector<EsSpec> es) const {
  return MarketInstance(scenarios_, std::move(vre), std::move(es), system_, mechanism_);
}

// ---------------------------------------------------------------------------

bool DecisionProfile::has_lost_load_allocation() const {
  for (const auto& v : vre)
    if (v.lost_load_share.empty()) return false;
  for (const auto& e : es)
    if (e.lost_load_share.empty()) return false;
  return true;
}

DecisionProfile zero_profile(const MarketInstance& instance, bool with_lost_load_allocation) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const HourlyTable zero(W, T);
  DecisionProfile p;
  for (const auto& v : instance.vre()) {
    VreDecision d{v.id, 0.0, zero, zero, {}};
    if (with_lost_load_allocation) d.lost_load_share = zero;
    p.vre.push_back(std::move(d));
  }
  for (const auto& e : instance.es()) {
    EsDecision d{e.id, 0.0, 0.0, zero, zero, zero, {}};
    if (with_lost_load_allocation) d.lost_load_share = zero;
    p.es.push_back(std::move(d));
  }
  p.cer_output = zero;
  p.lost_load = zero;
  return p;
}

namespace {

const HourlyTable& share_of(const HourlyTable& share) {
  if (share.empty())
    throw AccountingError("profile carries no lost-load allocation for this investor");
  return share;
}

}  // namespace

double net_supply(const DecisionProfile& profile, InvestorRef ref, std::size_t w, std::size_t t,
                  SupplyBasis basis) {
  if (ref.cls == InvestorClass::Vre) {
    if (ref.index >= profile.vre.size()) throw LookupError("VRE index out of range");
    const auto& d = profile.vre[ref.index];
    double a = d.market(w, t);
    if (basis == SupplyBasis::WithLostLoad) a += share_of(d.lost_load_share)(w, t);
    return a;
  }
  if (ref.index >= profile.es.size()) throw LookupError("ES index out of range");
  const auto& d = profile.es[ref.index];
  double a = d.discharge(w, t) - d.charge(w, t);
  if (basis == SupplyBasis::WithLostLoad) a += share_of(d.lost_load_share)(w, t);
  return a;
}

double net_supply(const DecisionProfile& profile, std::string_view id, std::size_t w,
                  std::size_t t, SupplyBasis basis) {
  for (std::size_t k = 0; k < profile.vre.size(); ++k)
    if (profile.vre[k].id == id) return net_supply(profile, {InvestorClass::Vre, k}, w, t, basis);
  for (std::size_t k = 0; k < profile.es.size(); ++k)
    if (profile.es[k].id == id) return net_supply(profile, {InvestorClass::Es, k}, w, t, basis);
  throw LookupError("unknown investor '" + std::string(id) + "'");
}

double total_net_supply(const DecisionProfile& profile, std::size_t w, std::size_t t,
                        SupplyBasis basis) {
  double s = 0.0;
  for (std::size_t k = 0; k < profile.vre.size(); ++k)
    s += net_supply(profile, {InvestorClass::Vre, k}, w, t, basis);
  for (std::size_t k = 0; k < profile.es.size(); ++k)
    s += net_supply(profile, {InvestorClass::Es, k}, w, t, basis);
  return s;
}

double capped_price(double total_supply, const Scenario& scenario, std::size_t t,
                    const SystemParams& system, double uplift, double tolerance) {
  const double demand = scenario.demand[t];
  if (total_supply > demand + tolerance * std::max(1.0, demand)) {
    std::ostringstream os;
    os << "low-carbon supply " << total_supply << " exceeds demand " << demand << " in scenario '"
       << scenario.label << "' hour " << t;
    throw InfeasibleSupplyError(os.str());
  }
  const double cap = system.remaining_capacity();
  const double residual = std::clamp(demand - total_supply, 0.0, cap);
  return scenario.cer_marginal_cost(t, residual) + uplift;
}

double mcp_price(double balance_dual, double probability) {
  if (!(probability > 0.0)) throw InvalidScenarioError("scenario probability must be positive");
  return balance_dual / probability;
}

// ---------------------------------------------------------------------------

double investment_cost(const MarketInstance& instance, const DecisionProfile& profile,
                       InvestorRef ref) {
  if (ref.cls == InvestorClass::Vre) {
    const auto& s = instance.vre()[ref.index];
    return s.scale_factor * s.capacity_cost * profile.vre.at(ref.index).capacity;
  }
  const auto& s = instance.es()[ref.index];
  const auto& d = profile.es.at(ref.index);
  return s.scale_factor * (s.energy_cost * d.energy_capacity + s.power_cost * d.power_capacity);
}

double operating_cost(const MarketInstance& instance, const DecisionProfile& profile,
                      InvestorRef ref) {
  if (ref.cls == InvestorClass::Vre) return 0.0;
  const auto& s = instance.es()[ref.index];
  const auto& d = profile.es.at(ref.index);
  double total = 0.0;
  for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
    double day = 0.0;
    for (std::size_t t = 0; t < instance.hours(); ++t)
      day += s.charge_cost * d.charge(w, t) + s.discharge_cost * d.discharge(w, t);
    total += instance.scenarios()[w].probability * day;
  }
  return total;
}

double cer_cost(const MarketInstance& instance, const DecisionProfile& profile) {
  double total = 0.0;
  for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
    const auto& s = instance.scenarios()[w];
    double day = 0.0;
    for (std::size_t t = 0; t < instance.hours(); ++t) {
      const double p = profile.cer_output(w, t);
      day += 0.5 * s.cer_slope[t] * p * p + s.cer_intercept[t] * p;
    }
    total += s.probability * day;
  }
  return total;
}

double lost_load_cost(const MarketInstance& instance, const DecisionProfile& profile) {
  double total = 0.0;
  for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
    double day = 0.0;
    for (std::size_t t = 0; t < instance.hours(); ++t) day += profile.lost_load(w, t);
    total += instance.scenarios()[w].probability * day;
  }
  return instance.system().voll * total;
}

double system_cost(const MarketInstance& instance, const DecisionProfile& profile) {
  double total = cer_cost(instance, profile) + lost_load_cost(instance, profile);
  for (std::size_t k = 0; k < instance.investor_count(); ++k) {
    const InvestorRef ref = instance.investor(k);
    total += investment_cost(instance, profile, ref) + operating_cost(instance, profile, ref);
  }
  return total;
}

double max_decision_difference(const DecisionProfile& a, const DecisionProfile& b) {
  if (a.vre.size() != b.vre.size() || a.es.size() != b.es.size())
    throw ModelError("profiles have different investor sets");
  double m = std::max(max_abs_difference(a.cer_output, b.cer_output),
                      max_abs_difference(a.lost_load, b.lost_load));
  for (std::size_t k = 0; k < a.vre.size(); ++k) {
    const auto& x = a.vre[k];
    const auto& y = b.vre[k];
    m = std::max({m, std::abs(x.capacity - y.capacity), max_abs_difference(x.market, y.market),
                  max_abs_difference(x.curtailed, y.curtailed)});
  }
  for (std::size_t k = 0; k < a.es.size(); ++k) {
    const auto& x = a.es[k];
    const auto& y = b.es[k];
    m = std::max({m, std::abs(x.energy_capacity - y.energy_capacity),
                  std::abs(x.power_capacity - y.power_capacity),
                  max_abs_difference(x.charge, y.charge),
                  max_abs_difference(x.discharge, y.discharge),
                  max_abs_difference(x.state_of_charge, y.state_of_charge)});
  }
  return m;
}

DecisionProfile with_pro_rata_sales(const MarketInstance& instance, DecisionProfile profile) {
  for (std::size_t w = 0; w < instance.scenario_count(); ++w)
    for (std::size_t t = 0; t < instance.hours(); ++t) {
      double available = 0.0, sold = 0.0;
      for (std::size_t i = 0; i < profile.vre.size(); ++i) {
        available += profile.vre[i].capacity * instance.capacity_factors(i, w)[t];
        sold += profile.vre[i].market(w, t);
      }
      if (!(available > 0.0)) continue;
      const double ratio = std::clamp(sold / available, 0.0, 1.0);
      for (std::size_t i = 0; i < profile.vre.size(); ++i) {
        auto& v = profile.vre[i];
        const double own = v.capacity * instance.capacity_factors(i, w)[t];
        v.market(w, t) = ratio * own;
        v.curtailed(w, t) = own - v.market(w, t);
      }
    }
  return profile;
}

std::vector<HourIndex> simultaneous_charge_hours(const DecisionProfile& profile,
                                                 double threshold) {
  std::vector<HourIndex> out;
  for (const auto& e : profile.es)
    for (std::size_t w = 0; w < e.charge.scenarios(); ++w)
      for (std::size_t t = 0; t < e.charge.hours(); ++t)
        if (e.charge(w, t) * e.discharge(w, t) > threshold) out.push_back({w, t, e.id});
  return out;
}

}  // namespace gridmech
