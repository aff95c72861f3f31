#include "gridmech/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "assembly.hpp"
#include "gridmech/error.hpp"
#include "gridmech/social_optimum.hpp"

namespace gridmech {
namespace {

qp::Solution solve_or_throw(const qp::QuadraticProgram& problem, const qp::Settings& settings,
                            const char* what) {
  auto sol = qp::solve(problem, settings);
  if (!sol.optimal()) {
    std::ostringstream os;
    os << what << " not solved: " << qp::to_string(sol.status) << " after " << sol.iterations
       << " iterations";
    throw SolverError(os.str());
  }
  return qp::minimum_norm_optimum(problem, sol, settings);
}

double expectation(const MarketInstance& instance, auto&& per_hour) {
  double total = 0.0;
  for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
    double day = 0.0;
    for (std::size_t t = 0; t < instance.hours(); ++t) day += per_hour(w, t);
    total += instance.scenarios()[w].probability * day;
  }
  return total;
}

HourlyTable capped_prices(const MarketInstance& instance, const DecisionProfile& profile,
                          const HourlyTable& uplift) {
  HourlyTable prices(instance.scenario_count(), instance.hours());
  for (std::size_t w = 0; w < instance.scenario_count(); ++w)
    for (std::size_t t = 0; t < instance.hours(); ++t)
      prices(w, t) =
          capped_price(total_net_supply(profile, w, t, SupplyBasis::WithLostLoad),
                       instance.scenarios()[w], t, instance.system(), uplift.value_or_zero(w, t));
  return prices;
}

std::vector<InvestorAccount> penalty_accounts(const MarketInstance& instance,
                                              const DecisionProfile& profile,
                                              const HourlyTable& prices, bool incentive) {
  std::vector<InvestorAccount> out;
  const double voll = instance.system().voll;
  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const InvestorRef ref = instance.investor(i);
    const HourlyTable& share = ref.cls == InvestorClass::Vre
                                   ? profile.vre[ref.index].lost_load_share
                                   : profile.es[ref.index].lost_load_share;
    InvestorAccount a;
    a.id = instance.investor_id(ref);
    a.market_revenue = expectation(
        instance, [&](auto w, auto t) { return prices(w, t) * net_supply(profile, ref, w, t); });
    a.lost_load_revenue =
        expectation(instance, [&](auto w, auto t) { return prices(w, t) * share(w, t); });
    a.investment_cost = investment_cost(instance, profile, ref);
    a.operating_cost = operating_cost(instance, profile, ref);
    a.penalty = expectation(instance, [&](auto w, auto t) { return voll * share(w, t); });
    if (incentive) a.incentive = quadratic_supply_term(instance, profile, i);
    a.profit = a.recomputed_profit();
    out.push_back(a);
  }
  return out;
}

std::vector<InvestorAccount> market_accounts(const MarketInstance& instance,
                                             const DecisionProfile& profile,
                                             const HourlyTable& prices) {
  std::vector<InvestorAccount> out;
  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const InvestorRef ref = instance.investor(i);
    InvestorAccount a;
    a.id = instance.investor_id(ref);
    a.market_revenue = expectation(
        instance, [&](auto w, auto t) { return prices(w, t) * net_supply(profile, ref, w, t); });
    a.investment_cost = investment_cost(instance, profile, ref);
    a.operating_cost = operating_cost(instance, profile, ref);
    a.profit = a.recomputed_profit();
    out.push_back(a);
  }
  return out;
}

// Potential-game solve shared by P, PI and PIU.
EquilibriumReport solve_penalty_game(const MarketInstance& instance, MechanismKind kind,
                                     const EquilibriumOptions& options) {
  const bool with_incentive = kind != MechanismKind::P;
  HourlyTable uplift;
  if (kind == MechanismKind::Piu) uplift = instance.mechanism().uplift;

  detail::MarketOptions mo;
  mo.blocks.investment_cost_scale = options.investment_cost_scale;
  mo.blocks.lost_load_share = true;
  mo.supply_quadratic_weight = with_incentive ? 0.0 : 1.0;
  mo.intercept_shift = uplift;
  const auto mp = detail::assemble_market(instance, mo);
  const auto sol = solve_or_throw(mp.qp, options.settings, "penalty-game problem");

  EquilibriumReport r;
  r.mechanism = kind;
  r.selection = "potential-maximizer";
  r.uplift = uplift;
  r.profile = detail::read_profile(mp, instance, sol.x);

  const std::size_t N = instance.investor_count();
  if (with_incentive && N > 0) {
    // The allocation of lost load among investors is not unique here; use
    // the equal split.
    for (std::size_t w = 0; w < instance.scenario_count(); ++w)
      for (std::size_t t = 0; t < instance.hours(); ++t) {
        const double share = r.profile.lost_load(w, t) / static_cast<double>(N);
        for (auto& v : r.profile.vre) v.lost_load_share(w, t) = share;
        for (auto& e : r.profile.es) e.lost_load_share(w, t) = share;
      }
    r.profile = with_pro_rata_sales(instance, std::move(r.profile));
    r.notes.push_back("lost load split equally among investors");
  }
  r.prices = capped_prices(instance, r.profile, uplift);
  r.accounts = penalty_accounts(instance, r.profile, r.prices, with_incentive);
  r.system_cost = system_cost(instance, r.profile);
  r.shifted_objective =
      uplift.empty() ? r.system_cost
                     : system_cost(instance.with_scenarios(
                                       instance.scenarios().with_intercept_shift(uplift)),
                                   r.profile);

  // Potential: sum of profits without incentive plus pairwise interaction.
  double potential = 0.0;
  for (const auto& a : r.accounts) potential += a.profit - a.incentive;
  potential += expectation(instance, [&](auto w, auto t) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = net_supply(r.profile, instance.investor(i), w, t, SupplyBasis::WithLostLoad);
      s += x;
      s2 += x * x;
    }
    return instance.scenarios()[w].cer_slope[t] * 0.5 * (s * s - s2);
  });
  r.potential = potential;
  r.notes.push_back("one equilibrium among possibly many; uniqueness is not claimed");
  return r;
}

bool homogeneous_vre(const MarketInstance& instance) {
  if (!instance.es().empty() || instance.vre().empty()) return false;
  const VreSpec& first = instance.vre().front();
  for (const VreSpec& v : instance.vre()) {
    if (v.capacity_cost != first.capacity_cost || v.scale_factor != first.scale_factor)
      return false;
    for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
      const auto a = instance.capacity_factors(0, w);
      const auto b = instance.scenarios()[w].capacity_factors.at(v.capacity_factor_key);
      if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
    }
  }
  return true;
}

}  // namespace

double EquilibriumReport::total_profit() const {
  double s = 0.0;
  for (const auto& a : accounts) s += a.profit;
  return s;
}

EquilibriumReport solve_p_equilibrium(const MarketInstance& instance,
                                      const EquilibriumOptions& options) {
  return solve_penalty_game(instance, MechanismKind::P, options);
}

EquilibriumReport solve_pi_equilibrium(const MarketInstance& instance,
                                       const EquilibriumOptions& options) {
  if (instance.mechanism().uplift.max_abs() != 0.0)
    throw ModelError("the PI mechanism carries no uplift; use PIU");
  return solve_penalty_game(instance, MechanismKind::Pi, options);
}

EquilibriumReport solve_piu_equilibrium(const MarketInstance& instance,
                                        const EquilibriumOptions& options) {
  return solve_penalty_game(instance, MechanismKind::Piu, options);
}

EquilibriumReport solve_mcp_competitive(const MarketInstance& instance,
                                        const EquilibriumOptions& options) {
  const SoResult so = solve_so(instance, options.settings);
  EquilibriumReport r;
  r.mechanism = MechanismKind::Mcp;
  r.selection = "social-optimum";
  r.profile = so.profile;
  r.prices = so.prices;
  r.accounts = market_accounts(instance, r.profile, r.prices);
  r.system_cost = so.system_cost;
  r.shifted_objective = so.system_cost;
  return r;
}

HourlyTable default_withholding_margin(const MarketInstance& instance) {
  HourlyTable eps(instance.scenario_count(), instance.hours());
  const double cap = instance.system().remaining_capacity();
  for (std::size_t w = 0; w < instance.scenario_count(); ++w)
    for (std::size_t t = 0; t < instance.hours(); ++t)
      eps(w, t) = 1e-3 * (instance.scenarios()[w].demand[t] - cap);
  return eps;
}

EquilibriumReport solve_mcp_withholding(const MarketInstance& instance,
                                        const HourlyTable& epsilon,
                                        const EquilibriumOptions& options) {
  if (!homogeneous_vre(instance))
    throw UnsupportedError("withholding outcome requires identical VRE investors only");
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const auto& sys = instance.system();
  const double cap = sys.remaining_capacity();
  const double voll = sys.voll;
  const auto N = static_cast<double>(instance.vre().size());

  HourlyTable eps = epsilon.empty() ? default_withholding_margin(instance) : epsilon;
  if (eps.scenarios() != W || eps.hours() != T)
    throw ParameterError("margin table has the wrong shape");
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      const double room = instance.scenarios()[w].demand[t] - cap;
      if (!(room > 0.0))
        throw UnsupportedError("withholding outcome requires demand above remaining CER capacity");
      if (!(eps(w, t) > 0.0) || eps(w, t) >= room)
        throw ParameterError("margin must lie in (0, D - remaining capacity)");
    }

  // Aggregate LP: maximize E sum VOLL * A - capital cost, A <= nu X,
  // A <= D - cap - eps.
  const VreSpec& spec = instance.vre().front();
  qp::QuadraticProgram lp;
  const auto X = lp.add_variable(0.0, qp::kInf, spec.scale_factor * spec.capacity_cost, "X");
  std::vector<std::size_t> A(W * T), cur(W * T);
  for (std::size_t w = 0; w < W; ++w) {
    const Scenario& s = instance.scenarios()[w];
    const auto nu = instance.capacity_factors(0, w);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      A[k] = lp.add_variable(0.0, s.demand[t] - cap - eps(w, t), -s.probability * voll);
      cur[k] = lp.add_variable(0.0, qp::kInf, 0.0);
      lp.add_constraint({{A[k], 1.0}, {cur[k], 1.0}, {X, -nu[t]}}, qp::Relation::Equal, 0.0);
    }
  }
  const auto sol = solve_or_throw(lp, options.settings, "withholding problem");

  EquilibriumReport r;
  r.mechanism = MechanismKind::Mcp;
  r.selection = "withholding";
  r.profile = zero_profile(instance, false);
  r.prices = HourlyTable(W, T, voll);
  r.epsilon = eps;
  for (auto& v : r.profile.vre) v.capacity = sol.x[X] / N;
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const double total = sol.x[A[k]];
      for (std::size_t i = 0; i < r.profile.vre.size(); ++i) {
        auto& v = r.profile.vre[i];
        v.market(w, t) = total / N;
        v.curtailed(w, t) = std::max(0.0, v.capacity * instance.capacity_factors(i, w)[t] -
                                              v.market(w, t));
      }
      r.profile.cer_output(w, t) = cap;
      r.profile.lost_load(w, t) = instance.scenarios()[w].demand[t] - total - cap;

      const Scenario& s = instance.scenarios()[w];
      const double threshold =
          (1.0 + N * cap / (s.demand[t] - cap)) * s.cer_marginal_cost(t, cap);
      if (voll < threshold) r.condition_holds = false;
    }
  r.accounts = market_accounts(instance, r.profile, r.prices);
  r.system_cost = system_cost(instance, r.profile);
  r.shifted_objective = r.system_cost;
  r.epsilon_bound = voll * expectation(instance, [&](auto w, auto t) { return eps(w, t); });
  if (!r.condition_holds)
    r.notes.push_back("VOLL below the withholding threshold in some hour: not certified");
  return r;
}

EquilibriumReport solve_equilibrium(const MarketInstance& instance, bool competitive_mcp,
                                    const EquilibriumOptions& options) {
  switch (instance.mechanism().kind) {
    case MechanismKind::Mcp:
      return competitive_mcp ? solve_mcp_competitive(instance, options)
                             : solve_mcp_withholding(instance, {}, options);
    case MechanismKind::P: return solve_p_equilibrium(instance, options);
    case MechanismKind::Pi: return solve_pi_equilibrium(instance, options);
    case MechanismKind::Piu: return solve_piu_equilibrium(instance, options);
  }
  throw UnsupportedError("unknown mechanism");
}

MarketInstance with_uniform_uplift(const MarketInstance& instance, double uplift) {
  if (!(uplift >= 0.0)) throw ParameterError("uplift must be non-negative");
  MechanismSpec m;
  m.kind = MechanismKind::Piu;
  if (uplift != 0.0) m.uplift = HourlyTable(instance.scenario_count(), instance.hours(), uplift);
  return instance.with_mechanism(std::move(m));
}

BreakEven break_even_uplift(const MarketInstance& instance, double lo, double hi,
                            double profit_tol, const EquilibriumOptions& options) {
  if (!(lo >= 0.0 && hi > lo)) throw ParameterError("break-even bracket needs 0 <= lo < hi");
  BreakEven out;
  auto profit = [&](double u) {
    ++out.evaluations;
    return solve_piu_equilibrium(with_uniform_uplift(instance, u), options).total_profit();
  };
  double f_lo = profit(lo);
  if (std::abs(f_lo) <= profit_tol) return {lo, f_lo, out.evaluations};
  double f_hi = profit(hi);
  if (std::abs(f_hi) <= profit_tol) return {hi, f_hi, out.evaluations};
  if ((f_lo < 0.0) == (f_hi < 0.0))
    throw ParameterError("total investor profit does not change sign on the uplift bracket");
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double f = profit(mid);
    out.uplift = mid;
    out.total_profit = f;
    if (std::abs(f) <= profit_tol || hi - lo < 1e-12 * std::max(1.0, hi)) break;
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  return out;
}

MarketInstance replicate(const MarketInstance& instance, std::size_t copies) {
  return replicate(instance, copies, copies);
}

MarketInstance replicate(const MarketInstance& instance, std::size_t vre_copies,
                         std::size_t es_copies) {
  if (vre_copies == 0 || es_copies == 0) throw ParameterError("replication count must be >= 1");
  std::vector<VreSpec> vre;
  std::vector<EsSpec> es;
  for (const auto& v : instance.vre())
    for (std::size_t k = 1; k <= vre_copies; ++k) {
      VreSpec c = v;
      if (vre_copies > 1) c.id += "#" + std::to_string(k);
      vre.push_back(std::move(c));
    }
  for (const auto& e : instance.es())
    for (std::size_t k = 1; k <= es_copies; ++k) {
      EsSpec c = e;
      if (es_copies > 1) c.id += "#" + std::to_string(k);
      es.push_back(std::move(c));
    }
  return instance.with_investors(std::move(vre), std::move(es));
}

double quadratic_supply_term(const MarketInstance& instance, const DecisionProfile& profile,
                             std::size_t investor) {
  const InvestorRef ref = instance.investor(investor);
  const SupplyBasis basis =
      profile.has_lost_load_allocation() ? SupplyBasis::WithLostLoad : SupplyBasis::Market;
  return expectation(instance, [&](auto w, auto t) {
    const double x = net_supply(profile, ref, w, t, basis);
    return 0.5 * instance.scenarios()[w].cer_slope[t] * x * x;
  });
}

double potential_constant(const MarketInstance& instance) {
  return expectation(instance, [&](auto w, auto t) {
    const Scenario& s = instance.scenarios()[w];
    return 0.5 * s.cer_slope[t] * s.demand[t] * s.demand[t] + s.cer_intercept[t] * s.demand[t];
  });
}

}  // namespace gridmech
