#include "gridmech/surplus.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "gridmech/error.hpp"

namespace gridmech {
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

double served(const MarketInstance& instance, const DecisionProfile& profile, std::size_t w,
              std::size_t t) {
  return instance.scenarios()[w].demand[t] - profile.lost_load(w, t);
}

}  // namespace

const char* to_string(UpliftPayer p) {
  return p == UpliftPayer::Consumers ? "consumers" : "operator";
}

UpliftPayer parse_uplift_payer(std::string_view text) {
  if (text == "consumers") return UpliftPayer::Consumers;
  if (text == "operator") return UpliftPayer::Operator;
  throw ParameterError("unknown uplift payer '" + std::string(text) +
                       "' (expected consumers or operator)");
}

double cer_surplus(const MarketInstance& instance, const DecisionProfile& profile,
                   const HourlyTable& prices) {
  const double revenue =
      expectation(instance, [&](auto w, auto t) { return prices(w, t) * profile.cer_output(w, t); });
  return revenue - cer_cost(instance, profile);
}

ConsumerAccounts consumer_accounts(const MarketInstance& instance, const DecisionProfile& profile,
                                   const HourlyTable& prices) {
  const double voll = instance.system().voll;
  ConsumerAccounts c;
  c.surplus = expectation(instance, [&](auto w, auto t) {
    return (voll - prices(w, t)) * served(instance, profile, w, t);
  });
  c.cost = voll * expectation(instance, [&](auto w, auto t) {
             return instance.scenarios()[w].demand[t];
           }) -
           c.surplus;
  return c;
}

double operator_surplus(const MarketInstance& instance, const DecisionProfile& profile,
                        const HourlyTable& prices, MechanismKind mechanism) {
  if (mechanism == MechanismKind::Mcp) return 0.0;
  if (!profile.has_lost_load_allocation())
    throw AccountingError("operator surplus needs a lost-load allocation");
  const double voll = instance.system().voll;
  const bool incentive = mechanism != MechanismKind::P;
  double total = 0.0;
  for (std::size_t i = 0; i < instance.investor_count(); ++i) {
    const InvestorRef ref = instance.investor(i);
    const HourlyTable& share = ref.cls == InvestorClass::Vre
                                   ? profile.vre[ref.index].lost_load_share
                                   : profile.es[ref.index].lost_load_share;
    total += expectation(instance, [&](auto w, auto t) {
      double v = (voll - prices(w, t)) * share(w, t);
      if (incentive) {
        const double s = net_supply(profile, ref, w, t, SupplyBasis::WithLostLoad);
        v -= 0.5 * instance.scenarios()[w].cer_slope[t] * s * s;
      }
      return v;
    });
  }
  return total;
}

SurplusReport surplus_report(const MarketInstance& instance, const EquilibriumReport& report,
                             UpliftPayer payer) {
  const DecisionProfile& profile = report.profile;
  const HourlyTable& prices = report.prices;
  const double voll = instance.system().voll;

  SurplusReport r;
  r.mechanism = report.mechanism;
  r.uplift_payer = payer;
  r.investors = report.accounts;
  for (const auto& a : r.investors) {
    r.total_ler_profit += a.profit;
    r.operator_penalty_intake += a.penalty;
    r.operator_lost_load_payment += a.lost_load_revenue;
    r.operator_incentive_outlay += a.incentive;
  }

  r.cer_revenue =
      expectation(instance, [&](auto w, auto t) { return prices(w, t) * profile.cer_output(w, t); });
  r.cer_cost = cer_cost(instance, profile);
  r.cer_surplus = cer_surplus(instance, profile, prices);

  r.gross_value = voll * expectation(instance, [&](auto w, auto t) {
                    return instance.scenarios()[w].demand[t];
                  });
  r.consumer_value =
      voll * expectation(instance, [&](auto w, auto t) { return served(instance, profile, w, t); });
  const double uplift_bill = expectation(instance, [&](auto w, auto t) {
    return report.uplift.value_or_zero(w, t) * served(instance, profile, w, t);
  });
  const double full_bill = expectation(
      instance, [&](auto w, auto t) { return prices(w, t) * served(instance, profile, w, t); });
  if (payer == UpliftPayer::Operator) {
    r.consumer_energy_payment = full_bill - uplift_bill;
    r.operator_uplift_outlay = uplift_bill;
  } else {
    r.consumer_energy_payment = full_bill;
  }
  r.consumer_surplus = r.consumer_value - r.consumer_energy_payment;
  r.consumer_cost = r.gross_value - r.consumer_surplus;

  r.operator_surplus = report.mechanism == MechanismKind::Mcp
                           ? 0.0
                           : operator_surplus(instance, profile, prices, report.mechanism) -
                                 r.operator_uplift_outlay;
  r.system_cost = system_cost(instance, profile);
  return r;
}

ConservationResult conservation_check(const SurplusReport& r) {
  ConservationResult c;
  double market_revenue = 0.0;
  for (const auto& a : r.investors) {
    market_revenue += a.market_revenue;
    c.investor_books_gap = std::max(c.investor_books_gap, std::abs(a.profit - a.recomputed_profit()));
  }
  c.energy_market_gap =
      r.consumer_energy_payment + r.operator_uplift_outlay - (market_revenue + r.cer_revenue);
  c.operator_books_gap =
      r.operator_surplus - (r.operator_penalty_intake - r.operator_lost_load_payment -
                            r.operator_incentive_outlay - r.operator_uplift_outlay);
  c.welfare_gap = r.consumer_surplus + r.cer_surplus + r.total_ler_profit + r.operator_surplus -
                  (r.gross_value - r.system_cost);
  c.tolerance = 1e-6 * std::max({1.0, std::abs(r.gross_value), std::abs(r.system_cost)});
  c.passed = std::abs(c.energy_market_gap) <= c.tolerance &&
             std::abs(c.operator_books_gap) <= c.tolerance &&
             c.investor_books_gap <= c.tolerance && std::abs(c.welfare_gap) <= c.tolerance;
  return c;
}

void write_surplus_csv(std::ostream& os, const SurplusReport& r) {
  const auto old_precision = os.precision(12);
  os << "participant,kind,revenue,cost,surplus\n";
  double total = 0.0;
  for (const auto& a : r.investors) {
    os << a.id << ",investor," << a.market_revenue + a.lost_load_revenue + a.incentive << ','
       << a.investment_cost + a.operating_cost + a.penalty << ',' << a.profit << '\n';
    total += a.profit;
  }
  os << "cer,cer," << r.cer_revenue << ',' << r.cer_cost << ',' << r.cer_surplus << '\n';
  os << "consumers,consumers," << r.consumer_value << ',' << r.consumer_energy_payment << ','
     << r.consumer_surplus << '\n';
  os << "operator,operator," << r.operator_penalty_intake << ','
     << r.operator_lost_load_payment + r.operator_incentive_outlay + r.operator_uplift_outlay
     << ',' << r.operator_surplus << '\n';
  total += r.cer_surplus + r.consumer_surplus + r.operator_surplus;
  os << "total,total,,," << total << '\n';
  os.precision(old_precision);
}

}  // namespace gridmech
