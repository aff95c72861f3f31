#pragma once

// Estimation of the CER supply curve from historical hourly market data.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridmech/model.hpp"

namespace gridmech::supply {

struct MarketRecord {
  std::chrono::sys_seconds timestamp{};
  double price = 0.0;   // day-ahead, $/MWh
  double demand = 0.0;  // forecast, MW
  double vre = 0.0;     // solar + wind generation, MW
  std::size_t line = 0; // source line, 1-based

  double net_demand() const { return demand - vre; }
};

/// Header `timestamp,price,demand,vre` (any column order). Timestamps are
/// ISO-8601 UTC: `YYYY-MM-DD[T ]HH:MM[:SS][Z]`. Output is sorted by time.
/// Throws ParseError with the offending line.
std::vector<MarketRecord> load_market_csv(const std::filesystem::path& path);
std::vector<MarketRecord> parse_market_csv(std::istream& in);

/// Calendar year-month of the record, e.g. "2021-02".
std::string year_month_key(const MarketRecord& r);
/// Calendar date of the record, e.g. "2021-02-14".
std::string day_key(const MarketRecord& r);

struct ClusterPlan {
  std::function<std::string(const MarketRecord&)> key = year_month_key;
  double price_ceiling = 250.0;
  std::vector<std::string> excluded;

  bool is_excluded(const std::string& cluster) const;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // fitting constant, not used downstream
  std::size_t points = 0;
  bool non_positive = false;  // slope <= 0: flagged, kept
};

/// OLS of price on net demand with a free constant. Throws SingularFitError
/// when fewer than two distinct net-demand values are present.
SlopeFit fit_cluster_slope(std::span<const MarketRecord> records);

struct ClusterFit {
  std::string key;
  SlopeFit fit;
};

/// Fits every retained cluster on its records priced at or below the
/// ceiling; ordered by cluster key. Runs clusters on up to `threads` workers.
std::vector<ClusterFit> fit_clusters(std::span<const MarketRecord> records,
                                     const ClusterPlan& plan, std::size_t threads = 1);

std::map<std::string, double> slope_map(const std::vector<ClusterFit>& fits);

/// b = price - slope * net demand.
double derive_intercept(const MarketRecord& r, double slope);

/// Per-record intercepts using the record's cluster slope. Throws
/// UnmappedRecordError when a record's cluster has no slope.
std::vector<double> derive_intercepts(std::span<const MarketRecord> records,
                                      const std::map<std::string, double>& slopes,
                                      const ClusterPlan& plan);

struct ScenarioBuildOptions {
  std::size_t hours_per_day = 24;
  /// Optional per-cluster weights; a day's weight is its cluster weight
  /// divided by the cluster's day count. Empty: uniform per day.
  std::map<std::string, double> cluster_weights;
  /// Capacity-factor key filled with vre / max(vre).
  std::string capacity_factor_key = "vre";
};

/// One scenario per calendar day of the retained clusters. Scenario demand
/// is the net demand, so slope * demand + intercept reproduces the
/// historical price. Throws GapError naming an incomplete day.
ScenarioSet build_scenarios(std::span<const MarketRecord> records, const ClusterPlan& plan,
                            const std::map<std::string, double>& slopes,
                            const ScenarioBuildOptions& options = {});

}  // namespace gridmech::supply
