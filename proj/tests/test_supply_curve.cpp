#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gridmech/error.hpp"
#include "gridmech/supply_curve.hpp"
#include "oracles.hpp"

namespace gridmech::supply {
namespace {

std::vector<MarketRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_market_csv(in);
}

TEST(MarketCsv, ParsesAnyColumnOrderAndSortsByTime) {
  const auto r = parse(
      "vre,price,timestamp,demand\n"
      "5,30.5,2021-03-01T01:00:00Z,100\n"
      "0,20,2021-03-01 00:00,90\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(day_key(r[0]), "2021-03-01");
  EXPECT_EQ(year_month_key(r[0]), "2021-03");
  EXPECT_DOUBLE_EQ(r[0].price, 20.0);
  EXPECT_DOUBLE_EQ(r[1].net_demand(), 95.0);
  EXPECT_EQ(r[1].line, 2u);
}

TEST(MarketCsv, RejectsMalformedInputWithLine) {
  try {
    parse("timestamp,price,demand,vre\n2021-01-01T00:00Z,abc,1,0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("timestamp,price,demand\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("timestamp,price,demand,vre\n2021-13-01T00:00Z,1,1,0\n"), ParseError);
  EXPECT_THROW(parse("timestamp,price,demand,vre\n2021-01-01T00:00Z,1,1,5\n"), ParseError);
  EXPECT_THROW(parse("timestamp,price,demand,vre\n2021-01-01T00:00Z,1,5,-1\n"), ParseError);
  EXPECT_THROW(parse("timestamp,price,demand,vre\n2021-01-01T00:00Z,1,5,1\n"
                     "2021-01-01T00:00Z,2,5,1\n"),
               ParseError);
  EXPECT_THROW(parse("timestamp,price,demand,vre\n2021-01-01T00:00Z,inf,5,1\n"), ParseError);
}

TEST(SlopeFit, MatchesClosedFormLeastSquares) {
  const auto records = parse(oracle::synthetic_market_csv(30, 0.3, 12.0, 1.0, 4));
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(r.net_demand());
    y.push_back(r.price);
  }
  const auto ref = oracle::least_squares_line(x, y);
  const SlopeFit fit = fit_cluster_slope(records);
  EXPECT_NEAR(fit.slope, ref.slope, 1e-10);
  EXPECT_NEAR(fit.intercept, ref.constant, 1e-7);
  EXPECT_EQ(fit.points, records.size());
  EXPECT_FALSE(fit.non_positive);
}

TEST(SlopeFit, RecoversPlantedSlopeUnderNoise) {
  // 1008 points, +-1 $/MWh uniform noise.
  const auto records = parse(oracle::synthetic_market_csv(42, 0.3, 5.0, 1.0, 11));
  ASSERT_GE(records.size(), 1000u);
  EXPECT_NEAR(fit_cluster_slope(records).slope, 0.3, 0.01);
}

TEST(SlopeFit, ConstantNetDemandIsSingular) {
  const auto r = parse(
      "timestamp,price,demand,vre\n"
      "2021-01-01T00:00Z,10,100,0\n"
      "2021-01-01T01:00Z,12,100,0\n");
  EXPECT_THROW(fit_cluster_slope(r), SingularFitError);
}

TEST(SlopeFit, FlagsNonPositiveSlope) {
  const auto r = parse(
      "timestamp,price,demand,vre\n"
      "2021-01-01T00:00Z,30,100,0\n"
      "2021-01-01T01:00Z,20,200,0\n"
      "2021-01-01T02:00Z,10,300,0\n");
  const SlopeFit f = fit_cluster_slope(r);
  EXPECT_NEAR(f.slope, -0.1, 1e-12);
  EXPECT_TRUE(f.non_positive);
}

TEST(Clusters, ExclusionAndCeilingApplied) {
  // Two noiseless months plus a January spike above the ceiling.
  std::string text = oracle::synthetic_market_csv(59, 0.2, 10.0, 0.0, 3);
  text += "2021-01-15T00:30:00Z,900,1000,0\n";
  const auto records = parse(text);
  ClusterPlan plan;
  plan.price_ceiling = 250.0;
  const auto fits = fit_clusters(records, plan);
  ASSERT_EQ(fits.size(), 2u);
  EXPECT_EQ(fits[0].key, "2021-01");
  EXPECT_NEAR(fits[0].fit.slope, 0.2, 1e-9);
  EXPECT_EQ(fits[0].fit.points, 31u * 24u);
  EXPECT_EQ(fits[1].fit.points, 28u * 24u);

  plan.excluded = {"2021-02"};
  const auto kept = fit_clusters(records, plan);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].key, "2021-01");
  EXPECT_TRUE(plan.is_excluded("2021-02"));
}

TEST(Clusters, ThreadCountDoesNotChangeResults) {
  const auto records = parse(oracle::synthetic_market_csv(120, 0.25, 8.0, 2.0, 5));
  ClusterPlan plan;
  const auto one = fit_clusters(records, plan, 1);
  const auto four = fit_clusters(records, plan, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_EQ(one[k].key, four[k].key);
    EXPECT_EQ(one[k].fit.slope, four[k].fit.slope);
  }
}

TEST(Intercepts, ReconstructPriceExactly) {
  const auto records = parse(oracle::synthetic_market_csv(31, 0.3, 7.0, 1.0, 8));
  ClusterPlan plan;
  const auto slopes = slope_map(fit_clusters(records, plan));
  const auto b = derive_intercepts(records, slopes, plan);
  const double a = slopes.at("2021-01");
  for (std::size_t k = 0; k < records.size(); ++k)
    EXPECT_NEAR(a * records[k].net_demand() + b[k], records[k].price,
                1e-12 * std::max(1.0, std::abs(records[k].price)));
  EXPECT_THROW(derive_intercepts(records, {}, plan), UnmappedRecordError);
}

TEST(Scenarios, OneDayPerScenarioReproducingPrices) {
  const auto records = parse(oracle::synthetic_market_csv(10, 0.3, 7.0, 1.0, 9));
  ClusterPlan plan;
  const auto slopes = slope_map(fit_clusters(records, plan));
  const ScenarioSet set = build_scenarios(records, plan, slopes);
  ASSERT_EQ(set.size(), 10u);
  EXPECT_EQ(set.hours(), 24u);
  EXPECT_NEAR(set[3].probability, 0.1, 1e-12);
  const auto& s = set[2];
  const auto& r = records[2 * 24 + 5];
  EXPECT_NEAR(s.cer_marginal_cost(5, s.demand[5]), r.price, 1e-9);
  EXPECT_NEAR(s.demand[5], r.net_demand(), 1e-12);
  double max_cf = 0.0;
  for (const auto& sc : set.scenarios())
    for (double v : sc.capacity_factors.at("vre")) max_cf = std::max(max_cf, v);
  EXPECT_DOUBLE_EQ(max_cf, 1.0);
}

TEST(Scenarios, ClusterWeightsSpreadOverDays) {
  const auto records = parse(oracle::synthetic_market_csv(59, 0.3, 7.0, 1.0, 2));
  ClusterPlan plan;
  const auto slopes = slope_map(fit_clusters(records, plan));
  ScenarioBuildOptions opt;
  opt.cluster_weights = {{"2021-01", 1.0}, {"2021-02", 3.0}};
  const ScenarioSet set = build_scenarios(records, plan, slopes, opt);
  EXPECT_NEAR(set[0].probability, 0.25 / 31.0, 1e-12);
  EXPECT_NEAR(set[40].probability, 0.75 / 28.0, 1e-12);
}

TEST(Scenarios, MissingHourRaisesGapError) {
  std::string text = oracle::synthetic_market_csv(2, 0.3, 7.0, 1.0, 2);
  // Drop 2021-01-02 05:00.
  const auto pos = text.find("2021-01-02T05:00:00Z");
  text.erase(pos, text.find('\n', pos) - pos + 1);
  const auto records = parse(text);
  ClusterPlan plan;
  const auto slopes = slope_map(fit_clusters(records, plan));
  try {
    build_scenarios(records, plan, slopes);
    FAIL();
  } catch (const GapError& e) {
    EXPECT_EQ(e.day(), "2021-01-02");
  }
}

}  // namespace
}  // namespace gridmech::supply
