#pragma once

// Participant-level accounting of a market outcome.

#include <iosfwd>
#include <string>
#include <vector>

#include "gridmech/equilibrium.hpp"
#include "gridmech/model.hpp"

namespace gridmech {

enum class UpliftPayer { Consumers, Operator };

const char* to_string(UpliftPayer p);
UpliftPayer parse_uplift_payer(std::string_view text);

/// $/day expectations. Gross flows are kept so the ledger can be audited.
struct SurplusReport {
  MechanismKind mechanism = MechanismKind::Mcp;
  UpliftPayer uplift_payer = UpliftPayer::Consumers;
  std::vector<InvestorAccount> investors;
  double total_ler_profit = 0.0;

  double cer_revenue = 0.0;
  double cer_cost = 0.0;
  double cer_surplus = 0.0;

  double consumer_value = 0.0;           // VOLL * served demand
  double consumer_energy_payment = 0.0;  // price paid on served demand
  double consumer_surplus = 0.0;
  double consumer_cost = 0.0;            // VOLL * E sum D - consumer surplus

  double operator_penalty_intake = 0.0;
  double operator_lost_load_payment = 0.0;  // price paid to investors for allocated lost load
  double operator_incentive_outlay = 0.0;
  double operator_uplift_outlay = 0.0;
  double operator_surplus = 0.0;

  double system_cost = 0.0;
  double gross_value = 0.0;  // VOLL * E sum D
};

/// E sum price * p_cv - CER cost.
double cer_surplus(const MarketInstance& instance, const DecisionProfile& profile,
                   const HourlyTable& prices);

struct ConsumerAccounts {
  double surplus = 0.0;
  double cost = 0.0;
};

ConsumerAccounts consumer_accounts(const MarketInstance& instance, const DecisionProfile& profile,
                                   const HourlyTable& prices);

/// Zero under MCP. Otherwise E sum_i [(VOLL - price) p_i^sh - incentive_i];
/// the incentive term is dropped under P. Throws AccountingError when the
/// profile has no lost-load allocation.
double operator_surplus(const MarketInstance& instance, const DecisionProfile& profile,
                        const HourlyTable& prices, MechanismKind mechanism);

SurplusReport surplus_report(const MarketInstance& instance, const EquilibriumReport& report,
                             UpliftPayer payer = UpliftPayer::Consumers);

struct ConservationResult {
  bool passed = true;
  double energy_market_gap = 0.0;   // consumer + operator uplift payment - supplier revenue
  double operator_books_gap = 0.0;  // reported operator surplus - recomputed
  double investor_books_gap = 0.0;  // max |reported profit - recomputed|
  double welfare_gap = 0.0;         // sum of surpluses - (gross value - system cost)
  double tolerance = 0.0;
};

/// Double-entry closure of the report within 1e-6 relative.
ConservationResult conservation_check(const SurplusReport& report);

/// Fixed-column CSV: one row per participant.
void write_surplus_csv(std::ostream& os, const SurplusReport& report);

}  // namespace gridmech
