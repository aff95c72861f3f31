#pragma once

// JSON and CSV serialization of instances, scenario sets, profiles and
// reports. Field names follow the model symbols: "rho", "D", "a", "b", "c",
// "nu", "c_X", "kappa", "gamma", "voll", "p_bar_cv", "uplift".

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "gridmech/equilibrium.hpp"
#include "gridmech/model.hpp"
#include "gridmech/network.hpp"
#include "gridmech/social_optimum.hpp"
#include "gridmech/surplus.hpp"

namespace gridmech::io {

using nlohmann::json;

json to_json(const HourlyTable& table);
HourlyTable hourly_table_from_json(const json& j);

json to_json(const ScenarioSet& scenarios);
ScenarioSet scenarios_from_json(const json& j);

/// Long format: header `scenario,probability,hour,demand,a,b[,c][,nu_<key>...]`;
/// `hour` counts from 0. Rows may come in any order.
ScenarioSet load_scenarios_csv(const std::filesystem::path& path);
ScenarioSet parse_scenarios_csv(std::istream& in);
void write_scenarios_csv(std::ostream& os, const ScenarioSet& scenarios);

json to_json(const MarketInstance& instance);
/// `base_dir` resolves a relative "scenario_file".
MarketInstance instance_from_json(const json& j, const std::filesystem::path& base_dir = {});
MarketInstance load_instance(const std::filesystem::path& path);

json to_json(const DecisionProfile& profile);
DecisionProfile profile_from_json(const json& j);

json to_json(const SoResult& so);
json to_json(const InvestorAccount& account);
InvestorAccount account_from_json(const json& j);
json to_json(const NashCertificate& certificate);
json to_json(const KktReport& report);
json to_json(const EquilibriumReport& report);
/// Profile, prices, mechanism and accounts; the certificate is not restored.
EquilibriumReport report_from_json(const json& j);
json to_json(const SurplusReport& report);
json to_json(const NetworkResult& result, const GridTopology& topology);

json to_json(const GridTopology& topology);
GridTopology topology_from_json(const json& j);
GridTopology load_topology(const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace gridmech::io
