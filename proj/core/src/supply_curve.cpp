#include "gridmech/supply_curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "gridmech/error.hpp"

namespace gridmech::supply {
namespace {

using namespace std::chrono;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

sys_seconds parse_timestamp(const std::string& text, std::size_t line) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi,
                      &consumed);
  if (n < 6 || (sep != 'T' && sep != ' '))
    throw ParseError(line, "unparsable timestamp '" + text + "'");
  std::string_view rest = std::string_view(text).substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest.front() == ':') {
    int more = 0;
    if (std::sscanf(rest.data(), ":%2d%n", &s, &more) != 1)
      throw ParseError(line, "unparsable timestamp '" + text + "'");
    rest.remove_prefix(static_cast<std::size_t>(more));
  }
  if (!rest.empty() && rest != "Z") throw ParseError(line, "unparsable timestamp '" + text + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0)
    throw ParseError(line, "timestamp out of range '" + text + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

double parse_number(const std::string& text, const char* column, std::size_t line) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError(line, std::string("unparsable ") + column + " '" + text + "'");
  return v;
}

std::string format_date(sys_seconds tp, bool with_day) {
  const year_month_day ymd{floor<days>(tp)};
  char buf[16];
  if (with_day)
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  else
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()));
  return buf;
}

}  // namespace

std::vector<MarketRecord> parse_market_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(trim(line));
      break;
    }
  }
  if (header.empty()) throw ParseError(0, "empty market file");

  int col_ts = -1, col_price = -1, col_demand = -1, col_vre = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    const int ci = static_cast<int>(c);
    if (h == "timestamp") col_ts = ci;
    else if (h == "price") col_price = ci;
    else if (h == "demand") col_demand = ci;
    else if (h == "vre") col_vre = ci;
  }
  for (auto [col, name] : {std::pair{col_ts, "timestamp"}, std::pair{col_price, "price"},
                           std::pair{col_demand, "demand"}, std::pair{col_vre, "vre"}})
    if (col < 0) throw ParseError(line_no, std::string("missing column '") + name + "'");
  const std::size_t needed =
      static_cast<std::size_t>(std::max({col_ts, col_price, col_demand, col_vre})) + 1;

  std::vector<MarketRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(trim(line));
    if (fields.size() < needed) throw ParseError(line_no, "too few fields");
    MarketRecord r;
    r.line = line_no;
    r.timestamp = parse_timestamp(fields[static_cast<std::size_t>(col_ts)], line_no);
    r.price = parse_number(fields[static_cast<std::size_t>(col_price)], "price", line_no);
    r.demand = parse_number(fields[static_cast<std::size_t>(col_demand)], "demand", line_no);
    r.vre = parse_number(fields[static_cast<std::size_t>(col_vre)], "vre", line_no);
    if (r.vre < 0.0) throw ParseError(line_no, "negative VRE generation");
    if (r.demand < r.vre) throw ParseError(line_no, "demand below VRE generation");
    out.push_back(r);
  }
  if (out.empty()) throw ParseError(0, "market file has no data rows");

  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  for (std::size_t k = 1; k < out.size(); ++k)
    if (out[k].timestamp == out[k - 1].timestamp)
      throw ParseError(std::max(out[k].line, out[k - 1].line), "duplicated timestamp");
  return out;
}

std::vector<MarketRecord> load_market_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return parse_market_csv(in);
}

std::string year_month_key(const MarketRecord& r) { return format_date(r.timestamp, false); }
std::string day_key(const MarketRecord& r) { return format_date(r.timestamp, true); }

bool ClusterPlan::is_excluded(const std::string& cluster) const {
  return std::find(excluded.begin(), excluded.end(), cluster) != excluded.end();
}

SlopeFit fit_cluster_slope(std::span<const MarketRecord> records) {
  SlopeFit f;
  f.points = records.size();
  if (records.empty()) throw SingularFitError("empty cluster");
  double mx = 0.0, my = 0.0;
  for (const auto& r : records) {
    mx += r.net_demand();
    my += r.price;
  }
  mx /= static_cast<double>(records.size());
  my /= static_cast<double>(records.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& r : records) {
    const double dx = r.net_demand() - mx;
    sxx += dx * dx;
    sxy += dx * (r.price - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * static_cast<double>(records.size())))
    throw SingularFitError("net demand is constant in the cluster");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.non_positive = !(f.slope > 0.0);
  return f;
}

std::vector<ClusterFit> fit_clusters(std::span<const MarketRecord> records,
                                     const ClusterPlan& plan, std::size_t threads) {
  std::map<std::string, std::vector<MarketRecord>> groups;
  for (const auto& r : records) {
    const std::string key = plan.key(r);
    if (plan.is_excluded(key)) continue;
    auto& g = groups[key];
    if (r.price <= plan.price_ceiling) g.push_back(r);
  }
  std::vector<ClusterFit> fits;
  std::vector<const std::vector<MarketRecord>*> data;
  for (auto& [key, g] : groups) {
    fits.push_back({key, {}});
    data.push_back(&g);
  }

  std::vector<std::exception_ptr> errors(fits.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t c = begin; c < fits.size(); c += stride) {
      try {
        fits[c].fit = fit_cluster_slope(*data[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, fits.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work, k, workers);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c = 0; c < errors.size(); ++c)
    if (errors[c]) {
      try {
        std::rethrow_exception(errors[c]);
      } catch (const SingularFitError& e) {
        throw SingularFitError("cluster " + fits[c].key + ": " + e.what());
      }
    }
  return fits;
}

std::map<std::string, double> slope_map(const std::vector<ClusterFit>& fits) {
  std::map<std::string, double> m;
  for (const auto& f : fits) m[f.key] = f.fit.slope;
  return m;
}

double derive_intercept(const MarketRecord& r, double slope) {
  return r.price - slope * r.net_demand();
}

std::vector<double> derive_intercepts(std::span<const MarketRecord> records,
                                      const std::map<std::string, double>& slopes,
                                      const ClusterPlan& plan) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::string key = plan.key(r);
    const auto it = slopes.find(key);
    if (it == slopes.end() || plan.is_excluded(key))
      throw UnmappedRecordError("record on line " + std::to_string(r.line) + " (cluster " + key +
                                ") has no fitted slope");
    out.push_back(derive_intercept(r, it->second));
  }
  return out;
}

ScenarioSet build_scenarios(std::span<const MarketRecord> records, const ClusterPlan& plan,
                            const std::map<std::string, double>& slopes,
                            const ScenarioBuildOptions& options) {
  const std::size_t T = options.hours_per_day;
  if (T == 0 || 86400 % T != 0) throw ParameterError("hours per day must divide 24 h evenly");
  const auto step = seconds{86400 / static_cast<long>(T)};

  struct Day {
    std::string cluster;
    std::vector<const MarketRecord*> slots;
  };
  std::map<std::string, Day> by_day;
  double vre_max = 0.0;
  for (const auto& r : records) {
    const std::string cluster = plan.key(r);
    if (plan.is_excluded(cluster)) continue;
    const std::string key = day_key(r);
    auto& d = by_day[key];
    d.cluster = cluster;
    d.slots.resize(T, nullptr);
    const auto offset = r.timestamp - floor<days>(r.timestamp);
    if (offset % step != seconds{0})
      throw GapError(key, "record on line " + std::to_string(r.line) + " is off the hour grid");
    d.slots[static_cast<std::size_t>(offset / step)] = &r;
    vre_max = std::max(vre_max, r.vre);
  }
  if (by_day.empty()) throw ParameterError("no retained records to build scenarios from");

  std::map<std::string, std::size_t> days_per_cluster;
  for (const auto& [key, d] : by_day) {
    for (std::size_t t = 0; t < T; ++t)
      if (!d.slots[t])
        throw GapError(key, "day " + key + " is missing hour " + std::to_string(t));
    ++days_per_cluster[d.cluster];
  }

  std::vector<Scenario> scenarios;
  for (const auto& [key, d] : by_day) {
    const auto it = slopes.find(d.cluster);
    if (it == slopes.end())
      throw UnmappedRecordError("day " + key + " (cluster " + d.cluster + ") has no fitted slope");
    Scenario s;
    s.label = key;
    if (options.cluster_weights.empty()) {
      s.probability = 1.0;
    } else {
      const auto w = options.cluster_weights.find(d.cluster);
      if (w == options.cluster_weights.end() || !(w->second > 0.0))
        throw ParameterError("cluster " + d.cluster + " has no positive weight");
      s.probability = w->second / static_cast<double>(days_per_cluster[d.cluster]);
    }
    auto& cf = s.capacity_factors[options.capacity_factor_key];
    for (std::size_t t = 0; t < T; ++t) {
      const MarketRecord& r = *d.slots[t];
      s.demand.push_back(r.net_demand());
      s.cer_slope.push_back(it->second);
      s.cer_intercept.push_back(derive_intercept(r, it->second));
      s.no_load_cost.push_back(0.0);
      cf.push_back(vre_max > 0.0 ? r.vre / vre_max : 0.0);
    }
    scenarios.push_back(std::move(s));
  }
  return ScenarioSet::normalized(T, std::move(scenarios));
}

}  // namespace gridmech::supply
