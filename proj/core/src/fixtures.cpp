#include "gridmech/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace gridmech {

MarketInstance toy_instance(const ToyOptions& o) {
  Scenario s;
  s.label = "toy";
  s.probability = 1.0;
  s.demand = {o.demand};
  s.cer_slope = {o.slope};
  s.cer_intercept = {o.intercept};
  s.no_load_cost = {0.0};
  s.capacity_factors["vre"] = {o.capacity_factor};

  std::vector<VreSpec> vre;
  for (std::size_t k = 1; k <= o.investors; ++k)
    vre.push_back({"vre" + std::to_string(k), o.capital_cost, 1.0, "vre"});

  SystemParams sys;
  sys.initial_cer_capacity = o.remaining_capacity;
  sys.remaining_fraction = 1.0;
  sys.voll = o.voll;
  sys.allow_low_voll = o.allow_low_voll;

  MechanismSpec mech;
  mech.kind = o.mechanism;
  if (o.uplift != 0.0) mech.uplift = HourlyTable(1, 1, o.uplift);
  return MarketInstance(ScenarioSet(1, {std::move(s)}), std::move(vre), {}, sys, std::move(mech));
}

VreSpec ParameterPack::solar(std::string id, std::string cf_key) const {
  return {std::move(id), solar_capacity_cost, daily_scale_factor(discount_rate, vre_lifetime_years),
          std::move(cf_key)};
}

VreSpec ParameterPack::wind(std::string id, std::string cf_key) const {
  return {std::move(id), wind_capacity_cost, daily_scale_factor(discount_rate, vre_lifetime_years),
          std::move(cf_key)};
}

EsSpec ParameterPack::storage(std::string id) const {
  EsSpec e;
  e.id = std::move(id);
  e.energy_cost = es_energy_cost;
  e.power_cost = es_power_cost;
  e.charge_cost = es_charge_cost;
  e.discharge_cost = es_discharge_cost;
  e.charge_efficiency = std::sqrt(roundtrip_efficiency);
  e.discharge_efficiency = std::sqrt(roundtrip_efficiency);
  e.min_duration = es_min_duration;
  e.max_duration = es_max_duration;
  e.scale_factor = daily_scale_factor(discount_rate, es_lifetime_years);
  return e;
}

ParameterPack default_parameter_pack() { return {}; }

MarketInstance synthetic_instance(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t T = o.hours;
  const double pi = std::numbers::pi;

  std::vector<Scenario> scenarios;
  for (std::size_t w = 0; w < o.scenarios; ++w) {
    Scenario s;
    s.label = "day" + std::to_string(w + 1);
    s.probability = 0.5 + u(rng);  // normalized below
    const double level = 0.8 + 0.2 * u(rng);
    const double clearness = 0.3 + 0.7 * u(rng);
    double wind = 0.2 + 0.5 * u(rng);
    const double a = (80.0 / o.initial_cer_capacity) * (0.9 + 0.2 * u(rng));
    const double b = 15.0 + 10.0 * u(rng);
    std::vector<double> solar_cf(T), wind_cf(T);
    for (std::size_t t = 0; t < T; ++t) {
      const double h = 24.0 * static_cast<double>(t) / static_cast<double>(T);
      // Morning shoulder and an evening peak around 19h.
      const double shape = 0.6 + 0.15 * std::exp(-std::pow((h - 9.0) / 3.0, 2)) +
                           0.25 * std::exp(-std::pow((h - 19.0) / 2.5, 2));
      s.demand.push_back(o.peak_demand * level * shape * (0.97 + 0.06 * u(rng)));
      s.cer_slope.push_back(a);
      s.cer_intercept.push_back(b);
      s.no_load_cost.push_back(0.0);
      solar_cf[t] = (h > 6.0 && h < 18.0) ? clearness * std::sin(pi * (h - 6.0) / 12.0) : 0.0;
      wind = std::clamp(wind + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
      wind_cf[t] = wind;
    }
    s.capacity_factors["solar"] = std::move(solar_cf);
    s.capacity_factors["wind"] = std::move(wind_cf);
    scenarios.push_back(std::move(s));
  }

  ParameterPack pack = default_parameter_pack();
  pack.voll = o.voll;
  pack.solar_capacity_cost *= o.capital_cost_factor;
  pack.wind_capacity_cost *= o.capital_cost_factor;
  pack.es_energy_cost *= o.capital_cost_factor;
  pack.es_power_cost *= o.capital_cost_factor;

  std::vector<VreSpec> vre;
  std::vector<EsSpec> es;
  for (std::size_t k = 1; k <= o.solar; ++k) vre.push_back(pack.solar("solar" + std::to_string(k)));
  for (std::size_t k = 1; k <= o.wind; ++k) vre.push_back(pack.wind("wind" + std::to_string(k)));
  for (std::size_t k = 1; k <= o.storage; ++k) es.push_back(pack.storage("es" + std::to_string(k)));

  SystemParams sys;
  sys.initial_cer_capacity = o.initial_cer_capacity;
  sys.remaining_fraction = o.remaining_fraction;
  sys.voll = o.voll;

  MechanismSpec mech;
  mech.kind = o.mechanism;
  return MarketInstance(ScenarioSet::normalized(T, std::move(scenarios)), std::move(vre),
                        std::move(es), sys, std::move(mech));
}

}  // namespace gridmech
