#pragma once

// Reference instances: the single-hour toy market, the default technology
// cost pack and a seeded synthetic generator.

#include <cstdint>

#include "gridmech/model.hpp"

namespace gridmech {

struct ToyOptions {
  std::size_t investors = 1;  // identical VRE investors
  double demand = 100.0;
  double remaining_capacity = 80.0;
  double slope = 0.5;
  double intercept = 10.0;
  double capital_cost = 30.0;  // per MW per day (scale factor 1)
  double capacity_factor = 1.0;
  double voll = 1000.0;
  bool allow_low_voll = false;
  MechanismKind mechanism = MechanismKind::Mcp;
  double uplift = 0.0;
};

/// One scenario, one hour, VRE investors "vre1".."vreN".
MarketInstance toy_instance(const ToyOptions& options = {});

/// Technology costs and market constants for the desk-scale studies.
struct ParameterPack {
  double voll = 3500.0;                 // $/MWh
  double solar_capacity_cost = 885000;  // $/MW
  double wind_capacity_cost = 1355000;  // $/MW
  double es_energy_cost = 385000;       // $/MWh
  double es_power_cost = 85000;         // $/MW
  double roundtrip_efficiency = 0.88;  // split evenly between charge and discharge
  double es_charge_cost = 0.5;         // $/MWh
  double es_discharge_cost = 0.5;      // $/MWh
  double vre_lifetime_years = kDefaultVreLifetimeYears;
  double es_lifetime_years = kDefaultEsLifetimeYears;
  double discount_rate = 0.0;
  double es_min_duration = 1.0;  // h
  double es_max_duration = 8.0;  // h

  VreSpec solar(std::string id, std::string cf_key = "solar") const;
  VreSpec wind(std::string id, std::string cf_key = "wind") const;
  EsSpec storage(std::string id) const;
};

ParameterPack default_parameter_pack();

struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t scenarios = 4;
  std::size_t hours = 24;
  std::size_t solar = 1;
  std::size_t wind = 1;
  std::size_t storage = 1;
  double peak_demand = 1000.0;       // MW
  double initial_cer_capacity = 1200.0;
  double remaining_fraction = 1.0;
  double voll = 3500.0;
  /// Multiplier on the default pack's capital costs (1 = pack values).
  double capital_cost_factor = 1.0;
  MechanismKind mechanism = MechanismKind::Mcp;
};

/// Deterministic for a given seed: daily demand with an evening peak, solar
/// and wind capacity factors, CER slopes tied to the initial fleet size.
MarketInstance synthetic_instance(const SyntheticOptions& options);

}  // namespace gridmech
