#include <gtest/gtest.h>

#include <sstream>

#include "gridmech/equilibrium.hpp"
#include "gridmech/error.hpp"
#include "gridmech/fixtures.hpp"
#include "gridmech/surplus.hpp"

namespace gridmech {
namespace {

MarketInstance toy_under(MechanismKind kind, double uplift = 0.0) {
  ToyOptions o;
  o.mechanism = kind;
  o.uplift = uplift;
  return toy_instance(o);
}

TEST(Surplus, CompetitiveMcpHandComputed) {
  const auto inst = toy_instance();
  const auto r = solve_mcp_competitive(inst);
  const auto s = surplus_report(inst, r);
  // Price 30 on 100 MW; CER makes 40 MW at cost 0.25 * 1600 + 400.
  EXPECT_NEAR(s.consumer_energy_payment, 3000.0, 1e-4);
  EXPECT_NEAR(s.consumer_surplus, 97000.0, 1e-4);
  EXPECT_NEAR(s.consumer_cost, 3000.0, 1e-4);
  EXPECT_NEAR(s.cer_surplus, 400.0, 1e-4);
  EXPECT_NEAR(s.total_ler_profit, 0.0, 1e-4);
  EXPECT_EQ(s.operator_surplus, 0.0);
  EXPECT_TRUE(conservation_check(s).passed);
}

TEST(Surplus, WithholdingLeavesConsumersNothing) {
  const auto inst = toy_instance();
  const auto r = solve_mcp_withholding(inst, HourlyTable(1, 1, 0.01));
  const auto s = surplus_report(inst, r);
  EXPECT_NEAR(s.consumer_surplus, 0.0, 1e-6 * 1000.0 * 100.0);
  EXPECT_EQ(s.operator_surplus, 0.0);
  EXPECT_TRUE(conservation_check(s).passed);
}

TEST(Surplus, UpliftPayerMovesTheUpliftBill) {
  const auto inst = toy_under(MechanismKind::Piu, 5.0);
  const auto r = solve_equilibrium(inst);
  const auto by_consumers = surplus_report(inst, r, UpliftPayer::Consumers);
  const auto by_operator = surplus_report(inst, r, UpliftPayer::Operator);
  EXPECT_NEAR(by_consumers.cer_surplus, 375.0, 1e-4);
  EXPECT_NEAR(by_consumers.consumer_energy_payment - by_operator.consumer_energy_payment, 500.0, 1e-4);
  EXPECT_NEAR(by_consumers.operator_surplus - by_operator.operator_surplus, 500.0, 1e-4);
  EXPECT_NEAR(by_operator.operator_uplift_outlay, 500.0, 1e-4);
  EXPECT_TRUE(conservation_check(by_consumers).passed);
  EXPECT_TRUE(conservation_check(by_operator).passed);
}

TEST(Surplus, IncentiveMechanismOperatorFundsIncentive) {
  const auto inst = toy_under(MechanismKind::Pi);
  const auto r = solve_equilibrium(inst);
  const auto s = surplus_report(inst, r);
  // No lost load; the operator pays the incentive 1/2 * 0.5 * 60^2.
  EXPECT_NEAR(s.operator_incentive_outlay, 900.0, 1e-3);
  EXPECT_NEAR(s.operator_surplus, -900.0, 1e-3);
  EXPECT_NEAR(operator_surplus(inst, r.profile, r.prices, MechanismKind::Pi), -900.0, 1e-3);
  EXPECT_TRUE(conservation_check(s).passed);
}

TEST(Surplus, ConservationCatchesTamperedAccounts) {
  const auto inst = toy_under(MechanismKind::P);
  const auto r = solve_equilibrium(inst);
  auto s = surplus_report(inst, r);
  ASSERT_TRUE(conservation_check(s).passed);
  s.cer_surplus += 10.0;
  EXPECT_FALSE(conservation_check(s).passed);
}

TEST(Surplus, OperatorNeedsLostLoadAllocation) {
  const auto inst = toy_under(MechanismKind::P);
  DecisionProfile p = zero_profile(inst, false);
  EXPECT_THROW(operator_surplus(inst, p, HourlyTable(1, 1, 30.0), MechanismKind::P), AccountingError);
}

TEST(Surplus, CsvHasFixedColumnsAndRows) {
  const auto inst = toy_under(MechanismKind::P);
  const auto s = surplus_report(inst, solve_equilibrium(inst));
  std::ostringstream os;
  write_surplus_csv(os, s);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "participant,kind,revenue,cost,surplus");
  std::vector<std::string> names;
  while (std::getline(in, line)) names.push_back(line.substr(0, line.find(',')));
  EXPECT_EQ(names, (std::vector<std::string>{"vre1", "cer", "consumers", "operator", "total"}));
}

TEST(Surplus, PayerNames) {
  EXPECT_EQ(parse_uplift_payer("operator"), UpliftPayer::Operator);
  EXPECT_STREQ(to_string(UpliftPayer::Consumers), "consumers");
  EXPECT_THROW(parse_uplift_payer("taxpayers"), ParameterError);
}

}  // namespace
}  // namespace gridmech
