#pragma once

// Bus-indexed variant of the planning problem and of the penalty game, with
// DC power flow between buses.

#include <map>
#include <string>
#include <vector>

#include "gridmech/equilibrium.hpp"
#include "gridmech/model.hpp"
#include "gridmech/qp.hpp"

namespace gridmech {

/// Bus data is expressed relative to the instance's scenarios: demand is a
/// share of scenario demand and the CER cost curve is the scenario curve
/// with its slope scaled and intercept shifted.
struct Bus {
  std::string id;
  double demand_share = 0.0;
  double cer_capacity = 0.0;  // MW before retirement
  double slope_scale = 1.0;
  double intercept_offset = 0.0;  // $/MWh
  double uplift = 0.0;            // $/MWh, PIU only
};

struct Line {
  std::string from;
  std::string to;
  double reactance = 1.0;  // p.u.
  double limit = qp::kInf; // MW
};

struct GridTopology {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::map<std::string, std::string> investor_bus;  // investor id -> bus id

  std::size_t bus_index(std::string_view id) const;
  /// Throws ModelError (bad data, disconnected graph) or LookupError
  /// (unmapped investor, unknown bus).
  void validate(const MarketInstance& instance) const;
};

/// One bus carrying all demand and CER capacity, every investor attached.
GridTopology single_bus_topology(const MarketInstance& instance);

struct FlowState {
  HourlyTable angle_by_bus_hour;  // rows: w * buses + n
  HourlyTable flow_by_line_hour;  // rows: w * lines + l
  HourlyTable injection_by_bus_hour;
};

struct NetworkResult {
  DecisionProfile profile;           // aggregate CER output and lost load
  std::vector<HourlyTable> cer_output_by_bus;
  std::vector<HourlyTable> lost_load_by_bus;  // operator lost load
  std::vector<HourlyTable> prices_by_bus;
  FlowState flows;
  double system_cost = 0.0;
  std::vector<InvestorAccount> accounts;  // P/PI only
  std::string selection;
  qp::Solution solution;

  /// max over lines and hours of (|flow| - limit)+; zero when every limit holds.
  double max_flow_violation(const GridTopology& topology) const;
  /// max |injection - sum of incident flows| at reported angles.
  double max_injection_mismatch(const GridTopology& topology) const;
};

qp::QuadraticProgram build_so_network(const MarketInstance& instance,
                                      const GridTopology& topology);

/// Nodal prices are lambda_n / rho.
NetworkResult solve_so_network(const MarketInstance& instance, const GridTopology& topology,
                               const qp::Settings& settings = {1e-12, 1e-12, 1e-12, 200, true});

/// Penalty game on the network under P (weighted quadratic term) or PI/PIU;
/// nodal prices follow each bus's own capped price function.
NetworkResult solve_network_p_equilibrium(
    const MarketInstance& instance, const GridTopology& topology,
    const qp::Settings& settings = {1e-12, 1e-12, 1e-12, 200, true});

}  // namespace gridmech
