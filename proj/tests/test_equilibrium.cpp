#include <gtest/gtest.h>

#include <cmath>

#include "gridmech/equilibrium.hpp"
#include "gridmech/error.hpp"
#include "gridmech/fixtures.hpp"
#include "gridmech/social_optimum.hpp"
#include "oracles.hpp"

namespace gridmech {
namespace {

MarketInstance toy_under(MechanismKind kind, double uplift = 0.0) {
  ToyOptions o;
  o.mechanism = kind;
  o.uplift = uplift;
  return toy_instance(o);
}

double total_capacity(const DecisionProfile& p) {
  double s = 0.0;
  for (const auto& v : p.vre) s += v.capacity;
  return s;
}

class PenaltyCournot : public ::testing::TestWithParam<int> {};

TEST_P(PenaltyCournot, MatchesFirstOrderConditionAndGridBestResponse) {
  const int n = GetParam();
  const auto inst = replicate(toy_under(MechanismKind::P), n);
  const auto r = solve_p_equilibrium(inst);
  const oracle::ToyMarket m;
  const double total = oracle::toy_cournot_total(m, n);
  EXPECT_NEAR(total_capacity(r.profile), total, 1e-4 * total);
  for (const auto& v : r.profile.vre) EXPECT_NEAR(v.capacity, total / n, 1e-4 * total);
  EXPECT_NEAR(r.prices(0, 0), oracle::toy_capped_price(m, total), 1e-4);
  if (n <= 2) {
    const double per = oracle::toy_best_response_fixed_point(m, n);
    EXPECT_NEAR(r.profile.vre[0].capacity, per, 1e-3);
  }
  EXPECT_EQ(r.selection, "potential-maximizer");
}

INSTANTIATE_TEST_SUITE_P(Investors, PenaltyCournot, ::testing::Values(1, 2, 4, 8));

TEST(PenaltyEquilibrium, ToyBAccounts) {
  const auto r = solve_p_equilibrium(toy_under(MechanismKind::P));
  ASSERT_EQ(r.accounts.size(), 1u);
  const auto& a = r.accounts[0];
  EXPECT_NEAR(a.profit, 450.0, 1e-4 * 450.0);
  EXPECT_NEAR(a.market_revenue, 45.0 * 30.0, 1e-3);
  EXPECT_NEAR(a.investment_cost, 900.0, 1e-3);
  EXPECT_NEAR(a.profit, a.recomputed_profit(), 1e-9);
  EXPECT_NEAR(r.system_cost, 2825.0, 1e-3);
}

TEST(PenaltyEquilibrium, PotentialIdentity) {
  // Potential = constant - system cost - sum of per-investor quadratic terms.
  for (int n : {1, 2, 4}) {
    const auto inst = replicate(toy_under(MechanismKind::P), n);
    const auto r = solve_p_equilibrium(inst);
    double quad = 0.0;
    for (std::size_t i = 0; i < inst.investor_count(); ++i)
      quad += quadratic_supply_term(inst, r.profile, i);
    EXPECT_NEAR(r.potential, potential_constant(inst) - r.system_cost - quad, 1e-5 * r.system_cost);
  }
}

TEST(IncentiveEquilibrium, ToyBReachesSocialOptimum) {
  const auto r = solve_pi_equilibrium(toy_under(MechanismKind::Pi));
  EXPECT_NEAR(total_capacity(r.profile), 60.0, 1e-4);
  EXPECT_NEAR(r.system_cost, 2600.0, 1e-3);
  EXPECT_NEAR(r.prices(0, 0), 30.0, 1e-5);
  // Revenue 1800 plus incentive 900 against capital 1800.
  EXPECT_NEAR(r.accounts[0].profit, 900.0, 1e-3);
}

TEST(IncentiveEquilibrium, RejectsUplift) {
  const auto piu = toy_under(MechanismKind::Piu, 5.0);
  EXPECT_THROW(solve_pi_equilibrium(piu), ModelError);
}

TEST(UpliftEquilibrium, ToyBShiftedOptimum) {
  const auto r = solve_piu_equilibrium(toy_under(MechanismKind::Piu, 5.0));
  EXPECT_NEAR(total_capacity(r.profile), 70.0, 1e-4);
  EXPECT_NEAR(r.system_cost, 2625.0, 1e-3);
  EXPECT_NEAR(r.prices(0, 0), 0.5 * 30.0 + 10.0 + 5.0, 1e-5);
  // Shifted objective uses b + 5: 2625 + 5 * 30.
  EXPECT_NEAR(r.shifted_objective, 2775.0, 1e-3);
}

TEST(UpliftEquilibrium, MatchesSocialOptimumOfShiftedInstance) {
  SyntheticOptions o;
  o.scenarios = 2;
  o.hours = 24;
  o.seed = 21;
  o.mechanism = MechanismKind::Piu;
  const auto inst = with_uniform_uplift(synthetic_instance(o), 12.0);
  const auto r = solve_piu_equilibrium(inst);
  const auto so = solve_so(apply_uplift(inst.with_mechanism({}), 12.0));
  EXPECT_LT(max_decision_difference(r.profile, with_pro_rata_sales(inst, so.profile)), 1e-5);
}

TEST(CompetitiveMcp, ShadowPricesOfTheOptimum) {
  const auto r = solve_mcp_competitive(toy_instance());
  EXPECT_EQ(r.selection, "social-optimum");
  EXPECT_NEAR(r.prices(0, 0), 30.0, 1e-6);
  EXPECT_NEAR(r.accounts[0].profit, 0.0, 1e-4 * 2600.0);
}

TEST(Withholding, ToyBRaisesPriceToVoll) {
  HourlyTable eps(1, 1, 0.01);
  const auto r = solve_mcp_withholding(toy_instance(), eps);
  EXPECT_EQ(r.selection, "withholding");
  EXPECT_NEAR(total_capacity(r.profile), 20.0 - 0.01, 1e-6);
  EXPECT_NEAR(r.prices(0, 0), 1000.0, 1e-9);
  EXPECT_NEAR(r.profile.lost_load(0, 0), 0.01, 1e-9);
  EXPECT_TRUE(r.condition_holds);
  EXPECT_NEAR(r.epsilon_bound, 10.0, 1e-9);
  // Revenue 1000 * 19.99 less capital 30 * 19.99.
  EXPECT_NEAR(r.accounts[0].profit, 970.0 * 19.99, 1e-6);
}

TEST(Withholding, SplitsEvenlyAndRejectsBadInput) {
  const auto r = solve_mcp_withholding(replicate(toy_instance(), 3));
  ASSERT_EQ(r.profile.vre.size(), 3u);
  EXPECT_NEAR(r.profile.vre[0].capacity, r.profile.vre[2].capacity, 1e-12);
  EXPECT_THROW(solve_mcp_withholding(toy_instance(), HourlyTable(1, 1, 25.0)), ParameterError);

  SyntheticOptions o;
  o.scenarios = 1;
  EXPECT_THROW(solve_mcp_withholding(synthetic_instance(o)), UnsupportedError);
  ToyOptions ample;
  ample.remaining_capacity = 120.0;
  EXPECT_THROW(solve_mcp_withholding(toy_instance(ample)), UnsupportedError);
}

TEST(Dispatch, FollowsInstanceMechanism) {
  EXPECT_EQ(solve_equilibrium(toy_instance()).selection, "withholding");
  EXPECT_EQ(solve_equilibrium(toy_instance(), true).selection, "social-optimum");
  EXPECT_EQ(solve_equilibrium(toy_under(MechanismKind::P)).mechanism, MechanismKind::P);
}

TEST(Replicate, CopiesInvestorsWithSuffixedIds) {
  const auto inst = replicate(toy_instance(), 3);
  ASSERT_EQ(inst.vre().size(), 3u);
  EXPECT_EQ(inst.vre()[0].id, "vre1#1");
  EXPECT_EQ(inst.vre()[2].id, "vre1#3");
  EXPECT_EQ(replicate(toy_instance(), 1).vre()[0].id, "vre1");
  EXPECT_THROW(replicate(toy_instance(), 0), ParameterError);
}

TEST(BreakEven, BisectionFindsZeroProfitUplift) {
  // Twelve investors make the zero-uplift profit negative on this fixture.
  SyntheticOptions o;
  o.scenarios = 3;
  o.hours = 24;
  o.remaining_fraction = 0.3;
  o.seed = 7;
  const auto inst = replicate(synthetic_instance(o), 4);
  const auto be = break_even_uplift(inst, 0.0, 400.0, 1.0);
  EXPECT_LE(std::abs(be.total_profit), 1.0);
  EXPECT_GT(be.uplift, 0.0);
  const auto check = solve_equilibrium(with_uniform_uplift(inst, be.uplift));
  EXPECT_NEAR(check.total_profit(), be.total_profit, 1e-3);
  EXPECT_THROW(break_even_uplift(inst, 300.0, 400.0), ParameterError);
}

TEST(Options, InvestmentScaleMovesTheSolution) {
  EquilibriumOptions opt;
  opt.investment_cost_scale = 1.01;
  const auto r = solve_p_equilibrium(toy_under(MechanismKind::P), opt);
  EXPECT_NEAR(total_capacity(r.profile), 29.7, 1e-4);
}

}  // namespace
}  // namespace gridmech
