#include "gridmech/verification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridmech/error.hpp"

namespace gridmech {

using qp::kInf;
using qp::Relation;
using qp::Term;

double KktReport::worst() const {
  return std::max({stationarity, primal_equality, primal_inequality, bound_violation, dual_sign,
                   complementarity});
}

KktReport kkt_residuals(const qp::QuadraticProgram& problem, const qp::Solution& sol) {
  KktReport r;
  const std::size_t n = problem.variable_count();
  if (n == 0 || sol.x.size() != n || sol.row_duals.size() != problem.constraint_count() ||
      sol.lower_duals.size() != n || sol.upper_duals.size() != n)
    return r;
  r.empty = false;

  std::vector<double> grad = problem.q_times(sol.x);
  const auto q = problem.linear();
  for (std::size_t j = 0; j < n; ++j) grad[j] += q[j] - sol.lower_duals[j] + sol.upper_duals[j];

  const auto activity = problem.row_activity(sol.x);
  for (std::size_t k = 0; k < problem.constraint_count(); ++k) {
    const auto& row = problem.constraint(k);
    const double y = sol.row_duals[k];
    for (const Term& term : row.terms) grad[term.var] += y * term.coef;
    const double viol = activity[k] - row.rhs;
    if (row.relation == Relation::Equal) {
      r.primal_equality = std::max(r.primal_equality, std::abs(viol));
    } else {
      r.primal_inequality = std::max(r.primal_inequality, std::max(0.0, viol));
      r.dual_sign = std::max(r.dual_sign, std::max(0.0, -y));
      r.complementarity = std::max(r.complementarity, std::abs(y * viol));
    }
  }

  const auto lo = problem.lower();
  const auto up = problem.upper();
  r.stationarity_by_variable.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    r.stationarity_by_variable[j] = std::abs(grad[j]);
    r.stationarity = std::max(r.stationarity, std::abs(grad[j]));
    const double x = sol.x[j];
    r.bound_violation = std::max({r.bound_violation, lo[j] - x, x - up[j], 0.0});
    r.dual_sign =
        std::max({r.dual_sign, -sol.lower_duals[j], -sol.upper_duals[j], 0.0});
    if (std::isfinite(lo[j]))
      r.complementarity = std::max(r.complementarity, std::abs(sol.lower_duals[j] * (x - lo[j])));
    else
      r.complementarity = std::max(r.complementarity, std::abs(sol.lower_duals[j]));
    if (std::isfinite(up[j]))
      r.complementarity = std::max(r.complementarity, std::abs(sol.upper_duals[j] * (up[j] - x)));
    else
      r.complementarity = std::max(r.complementarity, std::abs(sol.upper_duals[j]));
  }
  return r;
}

const char* to_string(CertificateMethod m) {
  return m == CertificateMethod::QpBestResponse ? "qp-best-response" : "grid-search";
}

namespace {

double expectation(const MarketInstance& instance, auto&& per_hour) {
  double total = 0.0;
  for (std::size_t w = 0; w < instance.scenario_count(); ++w) {
    double day = 0.0;
    for (std::size_t t = 0; t < instance.hours(); ++t) day += per_hour(w, t);
    total += instance.scenarios()[w].probability * day;
  }
  return total;
}

double incentive_weight(MechanismKind m) {
  switch (m) {
    case MechanismKind::P: return 0.0;
    case MechanismKind::Pi:
    case MechanismKind::Piu: return 1.0;
    case MechanismKind::Mcp: break;
  }
  throw UnsupportedError("best-response certification covers P, PI and PIU only");
}

double uplift_at(const MarketInstance& instance, MechanismKind m, std::size_t w, std::size_t t) {
  return m == MechanismKind::Piu ? instance.mechanism().uplift_at(w, t) : 0.0;
}

SupplyBasis basis_of(const DecisionProfile& profile) {
  return profile.has_lost_load_allocation() ? SupplyBasis::WithLostLoad : SupplyBasis::Market;
}

double own_share(const DecisionProfile& profile, InvestorRef ref, std::size_t w, std::size_t t) {
  const HourlyTable& s = ref.cls == InvestorClass::Vre ? profile.vre[ref.index].lost_load_share
                                                       : profile.es[ref.index].lost_load_share;
  return s.value_or_zero(w, t);
}

// Variables of the deviating investor in its best-response problem.
struct Deviation {
  InvestorRef ref;
  std::size_t capacity = 0, energy = 0, power = 0;
  std::vector<std::size_t> market, curtailed, charge, discharge, soc, shed;

  std::vector<Term> supply(std::size_t k) const {
    if (ref.cls == InvestorClass::Vre) return {{market[k], 1.0}, {shed[k], 1.0}};
    return {{discharge[k], 1.0}, {charge[k], -1.0}, {shed[k], 1.0}};
  }
};

Deviation add_resources(qp::QuadraticProgram& br, const MarketInstance& instance,
                        InvestorRef ref) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  Deviation d;
  d.ref = ref;
  d.shed.resize(W * T);
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t)
      d.shed[w * T + t] =
          br.add_variable(0.0, instance.scenarios()[w].demand[t],
                          instance.scenarios()[w].probability * instance.system().voll);

  if (ref.cls == InvestorClass::Vre) {
    const VreSpec& spec = instance.vre()[ref.index];
    d.capacity = br.add_variable(0.0, kInf, spec.scale_factor * spec.capacity_cost);
    d.market.resize(W * T);
    d.curtailed.resize(W * T);
    for (std::size_t w = 0; w < W; ++w) {
      const auto nu = instance.capacity_factors(ref.index, w);
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        d.market[k] = br.add_variable();
        d.curtailed[k] = br.add_variable();
        br.add_constraint({{d.market[k], 1.0}, {d.curtailed[k], 1.0}, {d.capacity, -nu[t]}},
                          Relation::Equal, 0.0);
      }
    }
    return d;
  }

  const EsSpec& spec = instance.es()[ref.index];
  d.energy = br.add_variable(0.0, kInf, spec.scale_factor * spec.energy_cost);
  d.power = br.add_variable(0.0, kInf, spec.scale_factor * spec.power_cost);
  br.add_constraint({{d.power, spec.min_duration}, {d.energy, -1.0}}, Relation::LessEqual, 0.0);
  br.add_constraint({{d.energy, 1.0}, {d.power, -spec.max_duration}}, Relation::LessEqual, 0.0);
  d.charge.resize(W * T);
  d.discharge.resize(W * T);
  d.soc.resize(W * T);
  for (std::size_t w = 0; w < W; ++w) {
    const double rho = instance.scenarios()[w].probability;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      d.charge[k] = br.add_variable(0.0, kInf, rho * spec.charge_cost);
      d.discharge[k] = br.add_variable(0.0, kInf, rho * spec.discharge_cost);
      d.soc[k] = br.add_variable();
    }
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const std::size_t before = w * T + (t + T - 1) % T;
      br.add_constraint({{d.charge[k], 1.0}, {d.power, -1.0}}, Relation::LessEqual, 0.0);
      br.add_constraint({{d.discharge[k], 1.0}, {d.power, -1.0}}, Relation::LessEqual, 0.0);
      br.add_constraint({{d.soc[k], 1.0}, {d.energy, -1.0}}, Relation::LessEqual, 0.0);
      br.add_constraint({{d.soc[k], 1.0},
                         {d.soc[before], -1.0},
                         {d.charge[k], -spec.charge_efficiency},
                         {d.discharge[k], 1.0 / spec.discharge_efficiency}},
                        Relation::Equal, 0.0);
    }
  }
  return d;
}

// The reported decision of the deviating investor as a point of the
// best-response problem.
std::vector<double> reported_point(const qp::QuadraticProgram& br, const Deviation& d,
                                   const MarketInstance& instance,
                                   const DecisionProfile& profile) {
  std::vector<double> x(br.variable_count(), 0.0);
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      x[d.shed[k]] = own_share(profile, d.ref, w, t);
      if (d.ref.cls == InvestorClass::Vre) {
        const auto& v = profile.vre[d.ref.index];
        x[d.market[k]] = v.market(w, t);
        x[d.curtailed[k]] = v.curtailed(w, t);
      } else {
        const auto& e = profile.es[d.ref.index];
        x[d.charge[k]] = e.charge(w, t);
        x[d.discharge[k]] = e.discharge(w, t);
        x[d.soc[k]] = e.state_of_charge(w, t);
      }
    }
  if (d.ref.cls == InvestorClass::Vre) {
    x[d.capacity] = profile.vre[d.ref.index].capacity;
  } else {
    x[d.energy] = profile.es[d.ref.index].energy_capacity;
    x[d.power] = profile.es[d.ref.index].power_capacity;
  }
  return x;
}

DecisionProfile substitute(const DecisionProfile& profile, const Deviation& d,
                           const MarketInstance& instance, std::span<const double> x) {
  DecisionProfile p = profile;
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const bool allocated = profile.has_lost_load_allocation();
  auto ensure = [&](HourlyTable& table) {
    if (table.empty()) table = HourlyTable(W, T);
  };
  if (!allocated) {
    for (auto& v : p.vre) ensure(v.lost_load_share);
    for (auto& e : p.es) ensure(e.lost_load_share);
  }
  if (d.ref.cls == InvestorClass::Vre) {
    auto& v = p.vre[d.ref.index];
    v.capacity = x[d.capacity];
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        v.market(w, t) = x[d.market[k]];
        v.curtailed(w, t) = x[d.curtailed[k]];
        v.lost_load_share(w, t) = x[d.shed[k]];
      }
  } else {
    auto& e = p.es[d.ref.index];
    e.energy_capacity = x[d.energy];
    e.power_capacity = x[d.power];
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        e.charge(w, t) = x[d.charge[k]];
        e.discharge(w, t) = x[d.discharge[k]];
        e.state_of_charge(w, t) = x[d.soc[k]];
        e.lost_load_share(w, t) = x[d.shed[k]];
      }
  }
  const double cap = instance.system().remaining_capacity();
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      double shares = 0.0;
      for (const auto& v : p.vre) shares += v.lost_load_share(w, t);
      for (const auto& e : p.es) shares += e.lost_load_share(w, t);
      p.lost_load(w, t) = shares;
      const double residual = instance.scenarios()[w].demand[t] -
                              total_net_supply(p, w, t, SupplyBasis::WithLostLoad);
      p.cer_output(w, t) = std::clamp(residual, 0.0, cap);
    }
  return p;
}

}  // namespace

double mechanism_profit(const MarketInstance& instance, MechanismKind mechanism,
                        const DecisionProfile& profile, std::size_t investor) {
  const double weight = incentive_weight(mechanism);
  const InvestorRef ref = instance.investor(investor);
  const SupplyBasis basis = basis_of(profile);
  const double voll = instance.system().voll;
  const double operating = expectation(instance, [&](std::size_t w, std::size_t t) {
    const Scenario& s = instance.scenarios()[w];
    const double total = total_net_supply(profile, w, t, basis);
    const double price = capped_price(total, s, t, instance.system(),
                                      uplift_at(instance, mechanism, w, t));
    const double supply = net_supply(profile, ref, w, t, basis);
    return price * supply - voll * own_share(profile, ref, w, t) +
           weight * 0.5 * s.cer_slope[t] * supply * supply;
  });
  return operating - investment_cost(instance, profile, ref) -
         operating_cost(instance, profile, ref);
}

BestResponse best_response(const MarketInstance& instance, MechanismKind mechanism,
                           const DecisionProfile& profile, std::size_t investor,
                           const CertifyOptions& options) {
  const double weight = incentive_weight(mechanism);
  if (investor >= instance.investor_count()) throw LookupError("investor ordinal out of range");
  const InvestorRef ref = instance.investor(investor);
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const SupplyBasis basis = basis_of(profile);
  const double cap = instance.system().remaining_capacity();

  BestResponse out;
  qp::QuadraticProgram& br = out.problem;
  const Deviation d = add_resources(br, instance, ref);

  // Profit: E sum [pi(O + s) s - VOLL sh + w/2 a s^2] - costs, with
  // pi = a (D - O - s) + b + uplift on the band where the operator covers
  // the residual. Minimize its negative.
  for (std::size_t w = 0; w < W; ++w) {
    const Scenario& s = instance.scenarios()[w];
    const double rho = s.probability;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const double others =
          total_net_supply(profile, w, t, basis) - net_supply(profile, ref, w, t, basis);
      const double a = s.cer_slope[t];
      const double slope_coef = rho * (2.0 - weight) * a;
      const double lin = -rho * (a * (s.demand[t] - others) + s.cer_intercept[t] +
                                 uplift_at(instance, mechanism, w, t));
      const auto terms = d.supply(k);
      for (std::size_t p = 0; p < terms.size(); ++p) {
        br.add_linear(terms[p].var, lin * terms[p].coef);
        br.add_quadratic(terms[p].var, terms[p].var, slope_coef * terms[p].coef * terms[p].coef);
        for (std::size_t r = p + 1; r < terms.size(); ++r)
          br.add_quadratic(terms[p].var, terms[r].var, slope_coef * terms[p].coef * terms[r].coef);
      }
      std::vector<Term> neg;
      for (const Term& term : terms) neg.push_back({term.var, -term.coef});
      br.add_constraint(terms, Relation::LessEqual, s.demand[t] - others);
      br.add_constraint(std::move(neg), Relation::LessEqual, -(s.demand[t] - cap - others));
    }
  }

  out.solution = qp::solve(br, options.settings);
  if (!out.solution.optimal()) {
    std::ostringstream os;
    os << "best response of " << instance.investor_id(ref)
       << " not solved: " << qp::to_string(out.solution.status);
    throw SolverError(os.str());
  }
  out.profile = substitute(profile, d, instance, out.solution.x);
  out.profit = mechanism_profit(instance, mechanism, out.profile, investor);
  out.current_profit = mechanism_profit(instance, mechanism, profile, investor);
  out.gain = out.profit - out.current_profit;

  // Stationarity of the reported decision paired with the best-response
  // multipliers; a convex QP shares its multipliers across all optima.
  const auto xr = reported_point(br, d, instance, profile);
  auto grad = br.q_times(xr);
  double scale = 1.0;
  double qx_norm = 0.0;
  for (double g : grad) qx_norm = std::max(qx_norm, std::abs(g));
  const auto q = br.linear();
  for (std::size_t j = 0; j < grad.size(); ++j) {
    scale = std::max(scale, 1.0 + std::abs(q[j]));
    grad[j] += q[j] - out.solution.lower_duals[j] + out.solution.upper_duals[j];
  }
  for (std::size_t k = 0; k < br.constraint_count(); ++k)
    for (const Term& term : br.constraint(k).terms)
      grad[term.var] += out.solution.row_duals[k] * term.coef;
  double worst = 0.0;
  for (double g : grad) worst = std::max(worst, std::abs(g));
  out.stationarity = worst / (scale + qx_norm);
  return out;
}

NashCertificate certify(const MarketInstance& instance, MechanismKind mechanism,
                        const DecisionProfile& profile, const CertifyOptions& options) {
  incentive_weight(mechanism);
  NashCertificate c;
  c.method = CertificateMethod::QpBestResponse;
  c.stationarity_tolerance = options.stationarity_tol;
  c.passed = true;
  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const BestResponse br = best_response(instance, mechanism, profile, i, options);
    InvestorCertificate ic;
    ic.id = instance.investor_id(instance.investor(i));
    ic.profit = br.current_profit;
    ic.best_profit = br.profit;
    ic.gain = br.gain;
    ic.tolerance = options.rel_tol * std::max(1.0, std::abs(br.current_profit));
    ic.stationarity = br.stationarity;
    ic.passed = ic.gain <= ic.tolerance && ic.stationarity <= options.stationarity_tol;
    if (!ic.passed) c.passed = false;
    if (c.investors.empty() || ic.gain > c.epsilon) {
      c.epsilon = ic.gain;
      c.tolerance = ic.tolerance;
    }
    c.investors.push_back(std::move(ic));
  }
  if (instance.investor_count() == 0) c.notes.push_back("no investors: nothing to certify");
  return c;
}

double withholding_threshold(const MarketInstance& instance, std::size_t w, std::size_t t,
                             std::size_t investors) {
  const Scenario& s = instance.scenarios()[w];
  const double cap = instance.system().remaining_capacity();
  const double room = s.demand[t] - cap;
  if (!(room > 0.0)) return kInf;
  return (1.0 + static_cast<double>(investors) * cap / room) * s.cer_marginal_cost(t, cap);
}

namespace {

// Revenue-maximizing sale in one hour for a deviator with `available` MW
// against rival sales `others`: price is VOLL while the operator cannot
// cover the residual, the capped CER marginal cost otherwise.
double best_hour_revenue(const Scenario& s, std::size_t t, double cap, double voll,
                         double others, double available) {
  const double D = s.demand[t];
  const double limit = std::min(available, std::max(0.0, D - others));
  const double a = s.cer_slope[t];
  const double b = s.cer_intercept[t];
  const double knee = D - cap - others;  // sales up to here clear at VOLL
  const double tol = 1e-9 * std::max(1.0, D);
  double best = 0.0;
  if (knee >= -tol) best = voll * std::clamp(knee, 0.0, limit);
  const double lo = std::max(0.0, knee);
  if (limit > lo + tol) {
    const double peak = std::clamp((a * (D - others) + b) / (2.0 * a), lo, limit);
    for (double sale : {lo, peak, limit}) {
      const double price = a * (D - others - sale) + b;
      if (sale > knee + tol) best = std::max(best, price * sale);
    }
  }
  return best;
}

double current_hour_revenue(const Scenario& s, std::size_t t, double cap, double voll,
                            double total, double own) {
  const double D = s.demand[t];
  const double tol = 1e-9 * std::max(1.0, D);
  const double price = total <= D - cap + tol ? voll : s.cer_marginal_cost(t, D - total);
  return price * own;
}

}  // namespace

NashCertificate mcp_withholding_check(const MarketInstance& instance,
                                      const DecisionProfile& profile,
                                      const WithholdingCheckOptions& options) {
  if (!instance.es().empty() || instance.vre().empty())
    throw UnsupportedError("withholding check covers VRE-only fleets");
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const std::size_t N = instance.vre().size();
  const double cap = instance.system().remaining_capacity();
  const double voll = instance.system().voll;

  NashCertificate c;
  c.method = CertificateMethod::GridSearch;

  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t)
      if (voll < withholding_threshold(instance, w, t, N)) c.condition_holds = false;

  const HourlyTable& eps = options.epsilon.empty() ? profile.lost_load : options.epsilon;
  c.epsilon_bound = voll * expectation(instance, [&](auto w, auto t) { return eps(w, t); });

  const std::size_t points = std::max<std::size_t>(options.grid_points, 3);
  for (std::size_t i = 0; i < N; ++i) {
    const VreSpec& spec = instance.vre()[i];
    const double unit_cost = spec.scale_factor * spec.capacity_cost;
    const VreDecision& own = profile.vre[i];

    const double current =
        expectation(instance,
                    [&](auto w, auto t) {
                      return current_hour_revenue(instance.scenarios()[w], t, cap, voll,
                                                  total_net_supply(profile, w, t),
                                                  own.market(w, t));
                    }) -
        unit_cost * own.capacity;

    auto deviation_profit = [&](double X) {
      return expectation(instance,
                         [&](auto w, auto t) {
                           const double others =
                               total_net_supply(profile, w, t) - own.market(w, t);
                           const double nu = instance.capacity_factors(i, w)[t];
                           return best_hour_revenue(instance.scenarios()[w], t, cap, voll,
                                                    others, nu * X);
                         }) -
             unit_cost * X;
    };

    // Beyond this capacity no hour can sell more.
    double x_max = own.capacity;
    for (std::size_t w = 0; w < W; ++w) {
      const auto nu = instance.capacity_factors(i, w);
      for (std::size_t t = 0; t < T; ++t)
        if (nu[t] > 1e-6)
          x_max = std::max(x_max, instance.scenarios()[w].demand[t] / nu[t]);
    }

    double lo = 0.0, hi = x_max, best_x = own.capacity;
    double best = deviation_profit(own.capacity);
    for (std::size_t round = 0; round <= options.refinement_rounds; ++round) {
      const double step = (hi - lo) / static_cast<double>(points - 1);
      for (std::size_t g = 0; g < points; ++g) {
        const double X = lo + step * static_cast<double>(g);
        const double v = deviation_profit(X);
        if (v > best) {
          best = v;
          best_x = X;
        }
      }
      lo = std::max(0.0, best_x - 2.0 * step);
      hi = std::min(x_max, best_x + 2.0 * step);
    }

    InvestorCertificate ic;
    ic.id = spec.id;
    ic.profit = current;
    ic.best_profit = std::max(best, current);
    ic.gain = ic.best_profit - current;
    ic.tolerance = c.epsilon_bound * (1.0 + 1e-9) + 1e-9;
    ic.passed = ic.gain <= ic.tolerance;
    if (c.investors.empty() || ic.gain > c.epsilon) {
      c.epsilon = ic.gain;
      c.tolerance = ic.tolerance;
    }
    c.investors.push_back(std::move(ic));
  }
  c.passed = c.condition_holds;
  for (const auto& ic : c.investors) c.passed = c.passed && ic.passed;
  if (!c.condition_holds) c.notes.push_back("VOLL below the withholding threshold");
  return c;
}

}  // namespace gridmech
