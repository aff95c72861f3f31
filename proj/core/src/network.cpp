#include "gridmech/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "assembly.hpp"
#include "gridmech/error.hpp"

namespace gridmech {

using qp::kInf;
using qp::Relation;
using qp::Term;

std::size_t GridTopology::bus_index(std::string_view id) const {
  for (std::size_t n = 0; n < buses.size(); ++n)
    if (buses[n].id == id) return n;
  throw LookupError("unknown bus '" + std::string(id) + "'");
}

void GridTopology::validate(const MarketInstance& instance) const {
  if (buses.empty()) throw ModelError("topology has no buses");
  std::set<std::string> ids;
  double share = 0.0;
  for (const Bus& b : buses) {
    if (!ids.insert(b.id).second) throw ModelError("duplicate bus id '" + b.id + "'");
    if (!(b.demand_share >= 0.0)) throw ModelError("bus demand share must be >= 0");
    if (!(b.cer_capacity >= 0.0)) throw ModelError("bus CER capacity must be >= 0");
    if (!(b.slope_scale > 0.0)) throw ModelError("bus slope scale must be > 0");
    if (!std::isfinite(b.intercept_offset)) throw ModelError("bus intercept offset not finite");
    if (!(b.uplift >= 0.0)) throw ParameterError("bus uplift must be >= 0");
    if (b.uplift != 0.0 && instance.mechanism().kind != MechanismKind::Piu)
      throw ModelError("bus uplift is only allowed under PIU");
    share += b.demand_share;
  }
  if (std::abs(share - 1.0) > 1e-9) throw ModelError("bus demand shares must sum to 1");

  std::vector<std::size_t> parent(buses.size());
  for (std::size_t n = 0; n < parent.size(); ++n) parent[n] = n;
  auto root = [&](std::size_t n) {
    while (parent[n] != n) n = parent[n] = parent[parent[n]];
    return n;
  };
  for (const Line& l : lines) {
    const std::size_t f = bus_index(l.from);
    const std::size_t t = bus_index(l.to);
    if (f == t) throw ModelError("line connects bus '" + l.from + "' to itself");
    if (!(l.reactance > 0.0) || !std::isfinite(l.reactance))
      throw ModelError("line reactance must be positive and finite");
    if (!(l.limit > 0.0)) throw ModelError("line limit must be > 0");
    parent[root(f)] = root(t);
  }
  for (std::size_t n = 1; n < buses.size(); ++n)
    if (root(n) != root(0)) throw ModelError("topology is not connected");

  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const std::string& id = instance.investor_id(instance.investor(i));
    const auto it = investor_bus.find(id);
    if (it == investor_bus.end()) throw LookupError("investor '" + id + "' has no bus");
    bus_index(it->second);
  }
  for (const auto& [id, bus] : investor_bus) instance.find_investor(id);
}

GridTopology single_bus_topology(const MarketInstance& instance) {
  GridTopology g;
  Bus b;
  b.id = "bus1";
  b.demand_share = 1.0;
  b.cer_capacity = instance.system().initial_cer_capacity;
  g.buses.push_back(b);
  for (std::size_t i = 0; i < instance.investor_count(); ++i)
    g.investor_bus[instance.investor_id(instance.investor(i))] = b.id;
  return g;
}

double NetworkResult::max_flow_violation(const GridTopology& topology) const {
  double worst = 0.0;
  const std::size_t L = topology.lines.size();
  if (L == 0 || flows.flow_by_line_hour.empty()) return 0.0;
  const std::size_t W = flows.flow_by_line_hour.scenarios() / L;
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t t = 0; t < flows.flow_by_line_hour.hours(); ++t)
        worst = std::max(worst,
                         std::abs(flows.flow_by_line_hour(w * L + l, t)) - topology.lines[l].limit);
  return worst;
}

double NetworkResult::max_injection_mismatch(const GridTopology& topology) const {
  const std::size_t B = topology.buses.size();
  if (flows.angle_by_bus_hour.empty()) return 0.0;
  const std::size_t W = flows.angle_by_bus_hour.scenarios() / B;
  const std::size_t T = flows.angle_by_bus_hour.hours();
  double worst = 0.0;
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> net(B, 0.0);
      for (const Line& l : topology.lines) {
        const std::size_t f = topology.bus_index(l.from);
        const std::size_t to = topology.bus_index(l.to);
        const double flow = (flows.angle_by_bus_hour(w * B + f, t) -
                             flows.angle_by_bus_hour(w * B + to, t)) /
                            l.reactance;
        net[f] += flow;
        net[to] -= flow;
      }
      for (std::size_t n = 0; n < B; ++n)
        worst = std::max(worst, std::abs(flows.injection_by_bus_hour(w * B + n, t) - net[n]));
    }
  return worst;
}

namespace {

enum class NetworkMode { Planning, PenaltyGame };

struct NetworkProblem {
  qp::QuadraticProgram qp;
  detail::InvestorBlocks blocks;
  std::vector<std::size_t> investor_bus;  // by ordinal
  std::vector<bool> bus_shed;             // operator lost load at bus n
  // Indexed [(w * T + t) * B + n] or [(w * T + t) * L + l].
  std::vector<std::size_t> cer, shed, angle, flow, balance;
  double supply_weight = 0.0;
};

double bus_slope(const Bus& b, const Scenario& s, std::size_t t) {
  return b.slope_scale * s.cer_slope[t];
}
double bus_intercept(const Bus& b, const Scenario& s, std::size_t t) {
  return s.cer_intercept[t] + b.intercept_offset;
}
double bus_uplift(const Bus& b, const MarketInstance& instance, std::size_t w, std::size_t t) {
  if (instance.mechanism().kind != MechanismKind::Piu) return 0.0;
  return b.uplift + instance.mechanism().uplift_at(w, t);
}

NetworkProblem assemble(const MarketInstance& instance, const GridTopology& g, NetworkMode mode) {
  g.validate(instance);
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const std::size_t B = g.buses.size();
  const std::size_t L = g.lines.size();
  const std::size_t I = instance.investor_count();
  const double voll = instance.system().voll;
  const double fraction = instance.system().remaining_fraction;
  const bool game = mode == NetworkMode::PenaltyGame;

  NetworkProblem np;
  if (game) {
    switch (instance.mechanism().kind) {
      case MechanismKind::P: np.supply_weight = 1.0; break;
      case MechanismKind::Pi:
      case MechanismKind::Piu: np.supply_weight = 0.0; break;
      case MechanismKind::Mcp:
        throw UnsupportedError("network penalty game needs the P, PI or PIU mechanism");
    }
  }
  detail::BlockOptions bo;
  bo.lost_load_share = game;
  np.blocks = detail::add_investor_blocks(np.qp, instance, bo);
  np.investor_bus.resize(I);
  np.bus_shed.assign(B, true);
  for (std::size_t i = 0; i < I; ++i) {
    np.investor_bus[i] = g.bus_index(g.investor_bus.at(instance.investor_id(instance.investor(i))));
    if (game) np.bus_shed[np.investor_bus[i]] = false;
  }

  np.cer.resize(W * T * B);
  np.shed.assign(W * T * B, static_cast<std::size_t>(-1));
  np.angle.assign(W * T * B, static_cast<std::size_t>(-1));
  np.flow.resize(W * T * L);
  np.balance.resize(W * T * B);
  for (std::size_t w = 0; w < W; ++w) {
    const Scenario& s = instance.scenarios()[w];
    const double rho = s.probability;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const std::string tag = "[" + std::to_string(w) + "," + std::to_string(t) + "]";
      std::vector<std::vector<Term>> rows(B);
      for (std::size_t n = 0; n < B; ++n) {
        const Bus& bus = g.buses[n];
        const double demand = bus.demand_share * s.demand[t];
        const std::size_t c = np.cer[k * B + n] = np.qp.add_variable(
            0.0, fraction * bus.cer_capacity,
            rho * (bus_intercept(bus, s, t) + bus_uplift(bus, instance, w, t)),
            "cer." + bus.id + tag);
        np.qp.add_quadratic(c, c, rho * bus_slope(bus, s, t));
        rows[n].push_back({c, -1.0});
        if (np.bus_shed[n]) {
          np.shed[k * B + n] =
              np.qp.add_variable(0.0, demand, rho * voll, "shed." + bus.id + tag);
          rows[n].push_back({np.shed[k * B + n], -1.0});
        }
        // The lowest-index bus is the angle reference.
        if (n > 0) np.angle[k * B + n] = np.qp.add_variable(-kInf, kInf, 0.0, "angle." + bus.id + tag);
      }
      for (std::size_t i = 0; i < I; ++i) {
        const std::size_t n = np.investor_bus[i];
        auto terms = np.blocks.supply_terms(i, k, true);
        if (np.supply_weight != 0.0)
          detail::add_squared_sum(np.qp, terms,
                                  np.supply_weight * rho * bus_slope(g.buses[n], s, t));
        for (const Term& term : terms) rows[n].push_back({term.var, -term.coef});
      }
      for (std::size_t l = 0; l < L; ++l) {
        const Line& line = g.lines[l];
        const std::size_t f = g.bus_index(line.from);
        const std::size_t to = g.bus_index(line.to);
        const std::size_t v = np.flow[k * L + l] =
            np.qp.add_variable(-line.limit, line.limit, 0.0, "flow" + std::to_string(l) + tag);
        std::vector<Term> dc{{v, 1.0}};
        if (f > 0) dc.push_back({np.angle[k * B + f], -1.0 / line.reactance});
        if (to > 0) dc.push_back({np.angle[k * B + to], 1.0 / line.reactance});
        np.qp.add_constraint(std::move(dc), Relation::Equal, 0.0, "dc" + std::to_string(l) + tag);
        rows[f].push_back({v, 1.0});
        rows[to].push_back({v, -1.0});
      }
      for (std::size_t n = 0; n < B; ++n)
        np.balance[k * B + n] =
            np.qp.add_constraint(std::move(rows[n]), Relation::Equal,
                                 -g.buses[n].demand_share * s.demand[t],
                                 "balance." + g.buses[n].id + tag);
    }
  }
  return np;
}

NetworkResult extract(const MarketInstance& instance, const GridTopology& g,
                      const NetworkProblem& np, qp::Solution sol, NetworkMode mode) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const std::size_t B = g.buses.size();
  const std::size_t L = g.lines.size();
  const std::size_t I = instance.investor_count();
  const double voll = instance.system().voll;
  const auto& x = sol.x;

  NetworkResult r;
  r.selection = mode == NetworkMode::Planning ? "social-optimum" : "potential-maximizer";
  r.profile = detail::read_investors(np.blocks, instance, x);
  r.cer_output_by_bus.assign(B, HourlyTable(W, T));
  r.lost_load_by_bus.assign(B, HourlyTable(W, T));
  r.prices_by_bus.assign(B, HourlyTable(W, T));
  r.flows.angle_by_bus_hour = HourlyTable(W * B, T);
  r.flows.flow_by_line_hour = HourlyTable(W * L, T);
  r.flows.injection_by_bus_hour = HourlyTable(W * B, T);

  double cost = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    const InvestorRef ref = instance.investor(i);
    cost += investment_cost(instance, r.profile, ref) + operating_cost(instance, r.profile, ref);
  }

  for (std::size_t w = 0; w < W; ++w) {
    const Scenario& s = instance.scenarios()[w];
    const double rho = s.probability;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      double cer_total = 0.0, lost_total = 0.0;
      for (std::size_t n = 0; n < B; ++n) {
        const Bus& bus = g.buses[n];
        const double p = x[np.cer[k * B + n]];
        const double shed = np.bus_shed[n] ? x[np.shed[k * B + n]] : 0.0;
        r.cer_output_by_bus[n](w, t) = p;
        r.lost_load_by_bus[n](w, t) = shed;
        cer_total += p;
        lost_total += shed;
        cost += rho * (0.5 * bus_slope(bus, s, t) * p * p + bus_intercept(bus, s, t) * p +
                       voll * shed);
        r.prices_by_bus[n](w, t) =
            mode == NetworkMode::Planning
                ? mcp_price(sol.row_duals[np.balance[k * B + n]], rho)
                : bus_slope(bus, s, t) * p + bus_intercept(bus, s, t) +
                      bus_uplift(bus, instance, w, t);
        r.flows.angle_by_bus_hour(w * B + n, t) = n > 0 ? x[np.angle[k * B + n]] : 0.0;
        r.flows.injection_by_bus_hour(w * B + n, t) = p + shed - bus.demand_share * s.demand[t];
      }
      for (std::size_t i = 0; i < I; ++i) {
        const double supply =
            net_supply(r.profile, instance.investor(i), w, t,
                       mode == NetworkMode::Planning ? SupplyBasis::Market
                                                     : SupplyBasis::WithLostLoad);
        r.flows.injection_by_bus_hour(w * B + np.investor_bus[i], t) += supply;
      }
      for (std::size_t l = 0; l < L; ++l) r.flows.flow_by_line_hour(w * L + l, t) = x[np.flow[k * L + l]];
      if (mode == NetworkMode::PenaltyGame)
        for (std::size_t i = 0; i < I; ++i) {
          const InvestorRef ref = instance.investor(i);
          const double share =
              net_supply(r.profile, ref, w, t, SupplyBasis::WithLostLoad) -
              net_supply(r.profile, ref, w, t);
          lost_total += share;
          cost += rho * voll * share;
        }
      r.profile.cer_output(w, t) = cer_total;
      r.profile.lost_load(w, t) = lost_total;
    }
  }
  r.system_cost = cost;

  if (mode == NetworkMode::PenaltyGame) {
    const bool incentive = instance.mechanism().kind != MechanismKind::P;
    for (std::size_t i = 0; i < I; ++i) {
      const InvestorRef ref = instance.investor(i);
      const std::size_t n = np.investor_bus[i];
      InvestorAccount a;
      a.id = instance.investor_id(ref);
      for (std::size_t w = 0; w < W; ++w) {
        const Scenario& s = instance.scenarios()[w];
        const double rho = s.probability;
        for (std::size_t t = 0; t < T; ++t) {
          const double price = r.prices_by_bus[n](w, t);
          const double sold = net_supply(r.profile, ref, w, t);
          const double total = net_supply(r.profile, ref, w, t, SupplyBasis::WithLostLoad);
          a.market_revenue += rho * price * sold;
          a.lost_load_revenue += rho * price * (total - sold);
          a.penalty += rho * voll * (total - sold);
          if (incentive) a.incentive += rho * 0.5 * bus_slope(g.buses[n], s, t) * total * total;
        }
      }
      a.investment_cost = investment_cost(instance, r.profile, ref);
      a.operating_cost = operating_cost(instance, r.profile, ref);
      a.profit = a.recomputed_profit();
      r.accounts.push_back(a);
    }
  }
  r.solution = std::move(sol);
  return r;
}

NetworkResult solve_network(const MarketInstance& instance, const GridTopology& topology,
                            const qp::Settings& settings, NetworkMode mode) {
  const NetworkProblem np = assemble(instance, topology, mode);
  auto sol = qp::solve(np.qp, settings);
  if (!sol.optimal()) {
    std::ostringstream os;
    os << "network problem not solved: " << qp::to_string(sol.status) << " after "
       << sol.iterations << " iterations";
    throw SolverError(os.str());
  }
  return extract(instance, topology, np, qp::minimum_norm_optimum(np.qp, sol, settings), mode);
}

}  // namespace

qp::QuadraticProgram build_so_network(const MarketInstance& instance,
                                      const GridTopology& topology) {
  return assemble(instance, topology, NetworkMode::Planning).qp;
}

NetworkResult solve_so_network(const MarketInstance& instance, const GridTopology& topology,
                               const qp::Settings& settings) {
  return solve_network(instance, topology, settings, NetworkMode::Planning);
}

NetworkResult solve_network_p_equilibrium(const MarketInstance& instance,
                                          const GridTopology& topology,
                                          const qp::Settings& settings) {
  return solve_network(instance, topology, settings, NetworkMode::PenaltyGame);
}

}  // namespace gridmech
