#include <gtest/gtest.h>

#include <cmath>

#include "gridmech/equilibrium.hpp"
#include "gridmech/fixtures.hpp"
#include "gridmech/social_optimum.hpp"
#include "gridmech/surplus.hpp"
#include "gridmech/verification.hpp"

namespace gridmech {
namespace {

MarketInstance random_instance(std::uint64_t seed, MechanismKind kind) {
  SyntheticOptions o;
  o.seed = seed;
  o.scenarios = 1 + seed % 3;
  o.hours = 24;
  o.solar = 1;
  o.wind = seed % 2;
  o.storage = (seed / 2) % 2;
  o.remaining_fraction = 0.4 + 0.15 * static_cast<double>(seed % 4);
  o.mechanism = kind;
  return synthetic_instance(o);
}

class RandomInstances : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomInstances, PenaltyGameCostsAtLeastTheOptimum) {
  const auto inst = random_instance(GetParam(), MechanismKind::P);
  const auto so = solve_so(inst);
  const auto p = solve_p_equilibrium(inst);
  EXPECT_GE(p.system_cost, so.system_cost * (1 - 1e-7));
  const auto cert = certify(inst, MechanismKind::P, p.profile);
  EXPECT_TRUE(cert.passed) << "epsilon " << cert.epsilon;
}

TEST_P(RandomInstances, CappedPricesNeverExceedCapPlusUplift) {
  const double uplift = 3.0 + GetParam();
  const auto inst = with_uniform_uplift(random_instance(GetParam(), MechanismKind::Piu), uplift);
  const auto r = solve_piu_equilibrium(inst);
  const double cap = inst.system().remaining_capacity();
  for (std::size_t w = 0; w < inst.scenario_count(); ++w)
    for (std::size_t t = 0; t < inst.hours(); ++t) {
      const double top = inst.scenarios()[w].cer_marginal_cost(t, cap) + uplift;
      EXPECT_LE(r.prices(w, t), top + 1e-6);
      EXPECT_GE(r.prices(w, t), inst.scenarios()[w].cer_intercept[t] + uplift - 1e-6);
    }
}

TEST_P(RandomInstances, ConservationHoldsForEveryMechanism) {
  for (auto kind : {MechanismKind::Mcp, MechanismKind::P, MechanismKind::Pi, MechanismKind::Piu}) {
    auto inst = random_instance(GetParam(), kind);
    if (kind == MechanismKind::Piu) inst = with_uniform_uplift(inst, 10.0);
    const auto r = solve_equilibrium(inst, true);
    for (auto payer : {UpliftPayer::Consumers, UpliftPayer::Operator}) {
      const auto c = conservation_check(surplus_report(inst, r, payer));
      EXPECT_TRUE(c.passed) << to_string(kind) << " welfare gap " << c.welfare_gap;
    }
  }
}

TEST_P(RandomInstances, IncentiveGameEqualsOptimum) {
  const auto inst = random_instance(GetParam(), MechanismKind::Pi);
  const auto pi = solve_pi_equilibrium(inst);
  const auto so = solve_so(inst);
  EXPECT_LT(max_decision_difference(pi.profile, with_pro_rata_sales(inst, so.profile)), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomInstances, ::testing::Values(1u, 2u, 3u, 4u, 5u));

TEST(Properties, RetirementRaisesOptimalCost) {
  double previous = 0.0;
  for (double gamma : {1.0, 0.7, 0.4}) {
    SyntheticOptions o;
    o.scenarios = 2;
    o.seed = 9;
    o.remaining_fraction = gamma;
    const double cost = solve_so(synthetic_instance(o)).system_cost;
    EXPECT_GE(cost, previous * (1 - 1e-9));
    previous = cost;
  }
}

TEST(Properties, UpliftRaisesInvestorProfit) {
  SyntheticOptions o;
  o.scenarios = 2;
  o.seed = 13;
  o.mechanism = MechanismKind::Piu;
  const auto base = synthetic_instance(o);
  double previous = -1e300;
  for (double u : {0.0, 10.0, 20.0, 40.0}) {
    const double profit = solve_equilibrium(with_uniform_uplift(base, u)).total_profit();
    EXPECT_GT(profit, previous);
    previous = profit;
  }
}

TEST(Properties, ReplicationNarrowsTheGapMonotonically) {
  ToyOptions o;
  o.mechanism = MechanismKind::P;
  double gap = 1e300;
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
    o.investors = n;
    const double g = solve_p_equilibrium(toy_instance(o)).system_cost - 2600.0;
    EXPECT_LT(g, gap);
    EXPECT_GT(g, 0.0);
    gap = g;
  }
}

}  // namespace
}  // namespace gridmech
