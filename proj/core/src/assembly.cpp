#include "assembly.hpp"

#include <string>

#include "gridmech/error.hpp"

namespace gridmech::detail {

using qp::kInf;
using qp::Relation;
using qp::Term;

std::vector<Term> InvestorBlocks::supply_terms(std::size_t ordinal, std::size_t k,
                                               bool with_shed) const {
  std::vector<Term> terms;
  if (ordinal < vre.size()) {
    const auto& v = vre[ordinal];
    terms.push_back({v.market[k], 1.0});
    if (with_shed && has_shed) terms.push_back({v.shed[k], 1.0});
  } else {
    const auto& e = es.at(ordinal - vre.size());
    terms.push_back({e.discharge[k], 1.0});
    terms.push_back({e.charge[k], -1.0});
    if (with_shed && has_shed) terms.push_back({e.shed[k], 1.0});
  }
  return terms;
}

InvestorBlocks add_investor_blocks(qp::QuadraticProgram& qp, const MarketInstance& instance,
                                   const BlockOptions& options) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const auto& sc = instance.scenarios();
  const double voll = instance.system().voll;

  InvestorBlocks blocks;
  blocks.has_shed = options.lost_load_share;

  auto add_shed = [&](std::vector<std::size_t>& shed, const std::string& id) {
    if (!options.lost_load_share) return;
    shed.resize(W * T);
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t t = 0; t < T; ++t)
        shed[w * T + t] = qp.add_variable(0.0, sc[w].demand[t], sc[w].probability * voll,
                                          id + ".shed[" + std::to_string(w) + "," +
                                              std::to_string(t) + "]");
  };

  for (std::size_t i = 0; i < instance.vre().size(); ++i) {
    const VreSpec& spec = instance.vre()[i];
    VreVars v;
    v.capacity = qp.add_variable(
        0.0, kInf, options.investment_cost_scale * spec.scale_factor * spec.capacity_cost,
        spec.id + ".X");
    v.market.resize(W * T);
    v.curtailed.resize(W * T);
    for (std::size_t w = 0; w < W; ++w) {
      const auto nu = instance.capacity_factors(i, w);
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        const std::string tag = "[" + std::to_string(w) + "," + std::to_string(t) + "]";
        v.market[k] = qp.add_variable(0.0, kInf, 0.0, spec.id + ".mk" + tag);
        v.curtailed[k] = qp.add_variable(0.0, kInf, 0.0, spec.id + ".cur" + tag);
        qp.add_constraint({{v.market[k], 1.0}, {v.curtailed[k], 1.0}, {v.capacity, -nu[t]}},
                          Relation::Equal, 0.0, spec.id + ".output" + tag);
      }
    }
    add_shed(v.shed, spec.id);
    blocks.vre.push_back(std::move(v));
  }

  for (const EsSpec& spec : instance.es()) {
    EsVars e;
    const double inv = options.investment_cost_scale * spec.scale_factor;
    e.energy = qp.add_variable(0.0, kInf, inv * spec.energy_cost, spec.id + ".S");
    e.power = qp.add_variable(0.0, kInf, inv * spec.power_cost, spec.id + ".P");
    qp.add_constraint({{e.power, spec.min_duration}, {e.energy, -1.0}}, Relation::LessEqual, 0.0,
                      spec.id + ".duration_min");
    qp.add_constraint({{e.energy, 1.0}, {e.power, -spec.max_duration}}, Relation::LessEqual, 0.0,
                      spec.id + ".duration_max");
    e.charge.resize(W * T);
    e.discharge.resize(W * T);
    e.soc.resize(W * T);
    for (std::size_t w = 0; w < W; ++w) {
      const double rho = sc[w].probability;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        const std::string tag = "[" + std::to_string(w) + "," + std::to_string(t) + "]";
        e.charge[k] = qp.add_variable(0.0, kInf, rho * spec.charge_cost, spec.id + ".ch" + tag);
        e.discharge[k] =
            qp.add_variable(0.0, kInf, rho * spec.discharge_cost, spec.id + ".dis" + tag);
        e.soc[k] = qp.add_variable(0.0, kInf, 0.0, spec.id + ".soc" + tag);
        qp.add_constraint({{e.charge[k], 1.0}, {e.power, -1.0}}, Relation::LessEqual, 0.0,
                          spec.id + ".ch_cap" + tag);
        qp.add_constraint({{e.discharge[k], 1.0}, {e.power, -1.0}}, Relation::LessEqual, 0.0,
                          spec.id + ".dis_cap" + tag);
        qp.add_constraint({{e.soc[k], 1.0}, {e.energy, -1.0}}, Relation::LessEqual, 0.0,
                          spec.id + ".soc_cap" + tag);
      }
      // Periodic state of charge: the level before hour 0 is the level after
      // hour T-1.
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = w * T + t;
        const std::size_t prev = w * T + (t == 0 ? T - 1 : t - 1);
        qp.add_constraint({{e.soc[k], 1.0},
                           {e.soc[prev], -1.0},
                           {e.charge[k], -spec.charge_efficiency},
                           {e.discharge[k], 1.0 / spec.discharge_efficiency}},
                          Relation::Equal, 0.0,
                          spec.id + ".soc_dyn[" + std::to_string(w) + "," + std::to_string(t) +
                              "]");
      }
    }
    add_shed(e.shed, spec.id);
    blocks.es.push_back(std::move(e));
  }
  return blocks;
}

void add_squared_sum(qp::QuadraticProgram& qp, std::span<const Term> terms, double weight) {
  for (std::size_t a = 0; a < terms.size(); ++a) {
    qp.add_quadratic(terms[a].var, terms[a].var, weight * terms[a].coef * terms[a].coef);
    for (std::size_t b = a + 1; b < terms.size(); ++b)
      qp.add_quadratic(terms[a].var, terms[b].var, weight * terms[a].coef * terms[b].coef);
  }
}

DecisionProfile read_investors(const InvestorBlocks& blocks, const MarketInstance& instance,
                               std::span<const double> x) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  DecisionProfile p = zero_profile(instance, blocks.has_shed);
  auto fill = [&](HourlyTable& table, const std::vector<std::size_t>& idx) {
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t t = 0; t < T; ++t) table(w, t) = x[idx[w * T + t]];
  };
  for (std::size_t i = 0; i < blocks.vre.size(); ++i) {
    const auto& v = blocks.vre[i];
    auto& d = p.vre[i];
    d.capacity = x[v.capacity];
    fill(d.market, v.market);
    fill(d.curtailed, v.curtailed);
    if (blocks.has_shed) fill(d.lost_load_share, v.shed);
  }
  for (std::size_t i = 0; i < blocks.es.size(); ++i) {
    const auto& e = blocks.es[i];
    auto& d = p.es[i];
    d.energy_capacity = x[e.energy];
    d.power_capacity = x[e.power];
    fill(d.charge, e.charge);
    fill(d.discharge, e.discharge);
    fill(d.state_of_charge, e.soc);
    if (blocks.has_shed) fill(d.lost_load_share, e.shed);
  }
  return p;
}

MarketProblem assemble_market(const MarketInstance& instance, const MarketOptions& options) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  const auto& sc = instance.scenarios();
  const auto& sys = instance.system();
  const double cap = sys.remaining_capacity();

  MarketProblem mp;
  mp.blocks = add_investor_blocks(mp.qp, instance, options.blocks);
  const std::size_t I = instance.investor_count();
  // Without investors the operator keeps the lost load.
  const bool per_investor = options.blocks.lost_load_share && I > 0;

  mp.cer.resize(W * T);
  if (!per_investor) mp.shed.resize(W * T);
  mp.balance.resize(W * T);
  for (std::size_t w = 0; w < W; ++w) {
    const Scenario& s = sc[w];
    const double rho = s.probability;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      const std::string tag = "[" + std::to_string(w) + "," + std::to_string(t) + "]";
      const double b = s.cer_intercept[t] + options.intercept_shift.value_or_zero(w, t);
      mp.cer[k] = mp.qp.add_variable(0.0, cap, rho * b, "cer" + tag);
      mp.qp.add_quadratic(mp.cer[k], mp.cer[k], rho * s.cer_slope[t]);

      std::vector<Term> row;
      row.push_back({mp.cer[k], -1.0});
      if (!per_investor) {
        mp.shed[k] = mp.qp.add_variable(0.0, s.demand[t], rho * sys.voll, "shed" + tag);
        row.push_back({mp.shed[k], -1.0});
      }
      for (std::size_t i = 0; i < I; ++i) {
        auto terms = mp.blocks.supply_terms(i, k, true);
        if (options.supply_quadratic_weight != 0.0)
          add_squared_sum(mp.qp, terms, options.supply_quadratic_weight * rho * s.cer_slope[t]);
        for (auto& term : terms) row.push_back({term.var, -term.coef});
      }
      mp.balance[k] = mp.qp.add_constraint(std::move(row), Relation::Equal, -s.demand[t],
                                           "balance" + tag);
    }
  }
  return mp;
}

DecisionProfile read_profile(const MarketProblem& problem, const MarketInstance& instance,
                             std::span<const double> x) {
  const std::size_t W = instance.scenario_count();
  const std::size_t T = instance.hours();
  DecisionProfile p = read_investors(problem.blocks, instance, x);
  for (std::size_t w = 0; w < W; ++w)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = w * T + t;
      p.cer_output(w, t) = x[problem.cer[k]];
      if (!problem.shed.empty()) {
        p.lost_load(w, t) = x[problem.shed[k]];
      } else {
        double total = 0.0;
        for (const auto& v : p.vre) total += v.lost_load_share(w, t);
        for (const auto& e : p.es) total += e.lost_load_share(w, t);
        p.lost_load(w, t) = total;
      }
    }
  return p;
}

}  // namespace gridmech::detail
