#include "gridmech/instance_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gridmech/error.hpp"

namespace gridmech::io {
namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ModelError(std::string("missing field '") + key + "'");
  return *it;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

// HourlyTable ---------------------------------------------------------------

json to_json(const HourlyTable& table) {
  json rows = json::array();
  for (std::size_t w = 0; w < table.scenarios(); ++w) {
    const auto r = table.row(w);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

HourlyTable hourly_table_from_json(const json& j) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw ModelError("hourly table must be an array of arrays");
  if (j.empty()) return {};
  const std::size_t hours = j.front().size();
  HourlyTable t(j.size(), hours);
  for (std::size_t w = 0; w < j.size(); ++w) {
    if (j[w].size() != hours) throw ModelError("hourly table rows differ in length");
    for (std::size_t h = 0; h < hours; ++h) t(w, h) = j[w][h].get<double>();
  }
  return t;
}

// Scenarios -------------------------------------------------------------------

namespace {

json scenario_to_json(const Scenario& s) {
  json j;
  j["label"] = s.label;
  j["rho"] = s.probability;
  j["D"] = s.demand;
  j["a"] = s.cer_slope;
  j["b"] = s.cer_intercept;
  j["c"] = s.no_load_cost;
  j["nu"] = s.capacity_factors;
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.label = get_or<std::string>(j, "label", "");
  s.probability = require(j, "rho").get<double>();
  s.demand = require(j, "D").get<std::vector<double>>();
  s.cer_slope = require(j, "a").get<std::vector<double>>();
  s.cer_intercept = require(j, "b").get<std::vector<double>>();
  s.no_load_cost = get_or<std::vector<double>>(j, "c", {});
  s.capacity_factors = get_or<std::map<std::string, std::vector<double>>>(j, "nu", {});
  return s;
}

}  // namespace

json to_json(const ScenarioSet& scenarios) {
  json list = json::array();
  for (const auto& s : scenarios.scenarios()) list.push_back(scenario_to_json(s));
  return {{"hours", scenarios.hours()}, {"scenarios", list}};
}

ScenarioSet scenarios_from_json(const json& j) {
  std::vector<Scenario> list;
  for (const auto& s : require(j, "scenarios")) list.push_back(scenario_from_json(s));
  const std::size_t hours =
      get_or<std::size_t>(j, "hours", list.empty() ? 0 : list.front().demand.size());
  return ScenarioSet(hours, std::move(list));
}

ScenarioSet parse_scenarios_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(text);
    while (std::getline(ss, field, ',')) {
      const auto b = field.find_first_not_of(" \t\r");
      const auto e = field.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
  };
  auto number = [&](const std::string& text, const std::string& column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
      throw ParseError(line_no, "unparsable " + column + " '" + text + "'");
    return v;
  };

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(0, "empty scenario file");
  const std::vector<std::string> fixed{"scenario", "probability", "hour", "demand", "a", "b"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw ParseError(line_no, "header must start with scenario,probability,hour,demand,a,b");
  std::size_t next = fixed.size();
  const bool has_c = header.size() > next && header[next] == "c";
  if (has_c) ++next;
  std::vector<std::string> nu_keys;
  for (std::size_t c = next; c < header.size(); ++c) {
    if (header[c].rfind("nu_", 0) != 0)
      throw ParseError(line_no, "unexpected column '" + header[c] + "'");
    nu_keys.push_back(header[c].substr(3));
  }

  struct Row {
    double rho, demand, a, b, c;
    std::vector<double> nu;
  };
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, Row>> rows;
  std::map<std::string, double> rho_of;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong number of fields");
    const std::string& label = f[0];
    Row r{};
    r.rho = number(f[1], "probability");
    const double hour = number(f[2], "hour");
    if (hour < 0 || hour != std::floor(hour)) throw ParseError(line_no, "hour must be a count");
    r.demand = number(f[3], "demand");
    r.a = number(f[4], "a");
    r.b = number(f[5], "b");
    r.c = has_c ? number(f[6], "c") : 0.0;
    for (std::size_t k = 0; k < nu_keys.size(); ++k)
      r.nu.push_back(number(f[next + k], "nu_" + nu_keys[k]));
    if (!rows.count(label)) {
      order.push_back(label);
      rho_of[label] = r.rho;
    } else if (rho_of[label] != r.rho) {
      throw ParseError(line_no, "probability differs within scenario '" + label + "'");
    }
    if (!rows[label].emplace(static_cast<std::size_t>(hour), r).second)
      throw ParseError(line_no, "duplicate hour in scenario '" + label + "'");
  }
  if (order.empty()) throw ParseError(0, "scenario file has no rows");

  const std::size_t T = rows[order.front()].rbegin()->first + 1;
  std::vector<Scenario> list;
  for (const auto& label : order) {
    const auto& hours = rows[label];
    if (hours.size() != T || hours.rbegin()->first + 1 != T)
      throw ParseError(0, "scenario '" + label + "' does not cover hours 0.." +
                              std::to_string(T - 1));
    Scenario s;
    s.label = label;
    s.probability = rho_of[label];
    for (const auto& [h, r] : hours) {
      s.demand.push_back(r.demand);
      s.cer_slope.push_back(r.a);
      s.cer_intercept.push_back(r.b);
      s.no_load_cost.push_back(r.c);
      for (std::size_t k = 0; k < nu_keys.size(); ++k) s.capacity_factors[nu_keys[k]].push_back(r.nu[k]);
    }
    list.push_back(std::move(s));
  }
  return ScenarioSet(T, std::move(list));
}

ScenarioSet load_scenarios_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return parse_scenarios_csv(in);
}

void write_scenarios_csv(std::ostream& os, const ScenarioSet& scenarios) {
  std::vector<std::string> keys;
  if (scenarios.size() > 0)
    for (const auto& [k, v] : scenarios[0].capacity_factors) keys.push_back(k);
  os << "scenario,probability,hour,demand,a,b,c";
  for (const auto& k : keys) os << ",nu_" << k;
  os << '\n';
  for (const auto& s : scenarios.scenarios())
    for (std::size_t t = 0; t < scenarios.hours(); ++t) {
      os << s.label << ',' << format_number(s.probability) << ',' << t << ','
         << format_number(s.demand[t]) << ',' << format_number(s.cer_slope[t]) << ','
         << format_number(s.cer_intercept[t]) << ','
         << format_number(s.no_load_cost.empty() ? 0.0 : s.no_load_cost[t]);
      for (const auto& k : keys) os << ',' << format_number(s.capacity_factors.at(k)[t]);
      os << '\n';
    }
}

// Instance --------------------------------------------------------------------

json to_json(const MarketInstance& instance) {
  json j = to_json(instance.scenarios());
  json vre = json::array();
  for (const auto& v : instance.vre())
    vre.push_back({{"id", v.id}, {"c_X", v.capacity_cost}, {"kappa", v.scale_factor},
                   {"nu_key", v.capacity_factor_key}});
  json es = json::array();
  for (const auto& e : instance.es())
    es.push_back({{"id", e.id},
                  {"c_S", e.energy_cost},
                  {"c_P", e.power_cost},
                  {"c_ch", e.charge_cost},
                  {"c_dis", e.discharge_cost},
                  {"eta_c", e.charge_efficiency},
                  {"eta_d", e.discharge_efficiency},
                  {"U_min", e.min_duration},
                  {"U_max", e.max_duration},
                  {"kappa", e.scale_factor}});
  j["vre"] = vre;
  j["es"] = es;
  const auto& sys = instance.system();
  j["system"] = {{"p_bar_cv", sys.initial_cer_capacity},
                 {"gamma", sys.remaining_fraction},
                 {"voll", sys.voll},
                 {"allow_low_voll", sys.allow_low_voll}};
  j["mechanism"] = {{"kind", std::string(to_string(instance.mechanism().kind))}};
  if (!instance.mechanism().uplift.empty())
    j["mechanism"]["uplift"] = to_json(instance.mechanism().uplift);
  return j;
}

MarketInstance instance_from_json(const json& j, const std::filesystem::path& base_dir) {
  ScenarioSet scenarios;
  if (j.contains("scenario_file")) {
    std::filesystem::path p = j["scenario_file"].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (p.extension() == ".json") {
      scenarios = scenarios_from_json(read_json_file(p));
    } else {
      scenarios = load_scenarios_csv(p);
    }
  } else {
    scenarios = scenarios_from_json(j);
  }

  std::vector<VreSpec> vre;
  for (const auto& v : get_or<json>(j, "vre", json::array()))
    vre.push_back({require(v, "id").get<std::string>(), require(v, "c_X").get<double>(),
                   require(v, "kappa").get<double>(), get_or<std::string>(v, "nu_key", "vre")});
  std::vector<EsSpec> es;
  for (const auto& e : get_or<json>(j, "es", json::array())) {
    EsSpec s;
    s.id = require(e, "id").get<std::string>();
    s.energy_cost = require(e, "c_S").get<double>();
    s.power_cost = require(e, "c_P").get<double>();
    s.charge_cost = get_or<double>(e, "c_ch", 0.0);
    s.discharge_cost = get_or<double>(e, "c_dis", 0.0);
    s.charge_efficiency = get_or<double>(e, "eta_c", 1.0);
    s.discharge_efficiency = get_or<double>(e, "eta_d", 1.0);
    s.min_duration = get_or<double>(e, "U_min", 1.0);
    s.max_duration = get_or<double>(e, "U_max", 1.0);
    s.scale_factor = require(e, "kappa").get<double>();
    es.push_back(std::move(s));
  }

  const json& sj = require(j, "system");
  SystemParams sys;
  sys.initial_cer_capacity = require(sj, "p_bar_cv").get<double>();
  sys.remaining_fraction = get_or<double>(sj, "gamma", 1.0);
  sys.voll = require(sj, "voll").get<double>();
  sys.allow_low_voll = get_or<bool>(sj, "allow_low_voll", false);

  MechanismSpec mech;
  if (j.contains("mechanism")) {
    const json& mj = j["mechanism"];
    mech.kind = parse_mechanism(get_or<std::string>(mj, "kind", "mcp"));
    if (mj.contains("uplift")) {
      const json& u = mj["uplift"];
      if (u.is_number()) {
        if (u.get<double>() != 0.0)
          mech.uplift = HourlyTable(scenarios.size(), scenarios.hours(), u.get<double>());
      } else {
        mech.uplift = hourly_table_from_json(u);
      }
    }
  }
  return MarketInstance(std::move(scenarios), std::move(vre), std::move(es), sys,
                        std::move(mech));
}

MarketInstance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json_file(path), path.parent_path());
}

// Profiles and reports ----------------------------------------------------------

json to_json(const DecisionProfile& p) {
  json vre = json::array();
  for (const auto& v : p.vre) {
    json d{{"id", v.id}, {"X", v.capacity}, {"p_mk", to_json(v.market)},
           {"p_cur", to_json(v.curtailed)}};
    if (!v.lost_load_share.empty()) d["p_sh"] = to_json(v.lost_load_share);
    vre.push_back(std::move(d));
  }
  json es = json::array();
  for (const auto& e : p.es) {
    json d{{"id", e.id},
           {"S", e.energy_capacity},
           {"P", e.power_capacity},
           {"p_ch", to_json(e.charge)},
           {"p_dis", to_json(e.discharge)},
           {"e", to_json(e.state_of_charge)}};
    if (!e.lost_load_share.empty()) d["p_sh"] = to_json(e.lost_load_share);
    es.push_back(std::move(d));
  }
  return {{"vre", vre}, {"es", es}, {"p_cv", to_json(p.cer_output)}, {"p_sh", to_json(p.lost_load)}};
}

DecisionProfile profile_from_json(const json& j) {
  DecisionProfile p;
  for (const auto& v : get_or<json>(j, "vre", json::array())) {
    VreDecision d;
    d.id = require(v, "id").get<std::string>();
    d.capacity = require(v, "X").get<double>();
    d.market = hourly_table_from_json(require(v, "p_mk"));
    d.curtailed = hourly_table_from_json(require(v, "p_cur"));
    d.lost_load_share = hourly_table_from_json(get_or<json>(v, "p_sh", nullptr));
    p.vre.push_back(std::move(d));
  }
  for (const auto& e : get_or<json>(j, "es", json::array())) {
    EsDecision d;
    d.id = require(e, "id").get<std::string>();
    d.energy_capacity = require(e, "S").get<double>();
    d.power_capacity = require(e, "P").get<double>();
    d.charge = hourly_table_from_json(require(e, "p_ch"));
    d.discharge = hourly_table_from_json(require(e, "p_dis"));
    d.state_of_charge = hourly_table_from_json(require(e, "e"));
    d.lost_load_share = hourly_table_from_json(get_or<json>(e, "p_sh", nullptr));
    p.es.push_back(std::move(d));
  }
  p.cer_output = hourly_table_from_json(require(j, "p_cv"));
  p.lost_load = hourly_table_from_json(require(j, "p_sh"));
  return p;
}

json to_json(const SoResult& so) {
  return {{"profile", to_json(so.profile)},
          {"system_cost", so.system_cost},
          {"objective", so.objective},
          {"lambda", to_json(so.balance_duals)},
          {"prices", to_json(so.prices)},
          {"mu_cv_lower", to_json(so.cer_lower_duals)},
          {"mu_cv_upper", to_json(so.cer_upper_duals)},
          {"mu_sh_lower", to_json(so.shed_lower_duals)},
          {"status", qp::to_string(so.solution.status)},
          {"iterations", so.solution.iterations}};
}

json to_json(const InvestorAccount& a) {
  return {{"id", a.id},
          {"market_revenue", a.market_revenue},
          {"lost_load_revenue", a.lost_load_revenue},
          {"investment_cost", a.investment_cost},
          {"operating_cost", a.operating_cost},
          {"penalty", a.penalty},
          {"incentive", a.incentive},
          {"profit", a.profit}};
}

InvestorAccount account_from_json(const json& j) {
  InvestorAccount a;
  a.id = require(j, "id").get<std::string>();
  a.market_revenue = get_or<double>(j, "market_revenue", 0.0);
  a.lost_load_revenue = get_or<double>(j, "lost_load_revenue", 0.0);
  a.investment_cost = get_or<double>(j, "investment_cost", 0.0);
  a.operating_cost = get_or<double>(j, "operating_cost", 0.0);
  a.penalty = get_or<double>(j, "penalty", 0.0);
  a.incentive = get_or<double>(j, "incentive", 0.0);
  a.profit = require(j, "profit").get<double>();
  return a;
}

json to_json(const NashCertificate& c) {
  json investors = json::array();
  for (const auto& i : c.investors)
    investors.push_back({{"id", i.id},
                         {"profit", i.profit},
                         {"best_profit", i.best_profit},
                         {"gain", i.gain},
                         {"tolerance", i.tolerance},
                         {"stationarity", i.stationarity},
                         {"passed", i.passed}});
  json j{{"method", to_string(c.method)},
         {"passed", c.passed},
         {"epsilon", c.epsilon},
         {"tolerance", c.tolerance},
         {"stationarity_tolerance", c.stationarity_tolerance},
         {"investors", investors},
         {"notes", c.notes}};
  if (c.method == CertificateMethod::GridSearch) {
    j["condition_holds"] = c.condition_holds;
    j["epsilon_bound"] = c.epsilon_bound;
  }
  return j;
}

json to_json(const KktReport& r) {
  return {{"empty", r.empty},
          {"stationarity", r.stationarity},
          {"primal_equality", r.primal_equality},
          {"primal_inequality", r.primal_inequality},
          {"bound_violation", r.bound_violation},
          {"dual_sign", r.dual_sign},
          {"complementarity", r.complementarity},
          {"worst", r.worst()}};
}

json to_json(const EquilibriumReport& r) {
  json accounts = json::array();
  for (const auto& a : r.accounts) accounts.push_back(to_json(a));
  json j{{"mechanism", std::string(to_string(r.mechanism))},
         {"selection", r.selection},
         {"profile", to_json(r.profile)},
         {"prices", to_json(r.prices)},
         {"accounts", accounts},
         {"total_profit", r.total_profit()},
         {"system_cost", r.system_cost},
         {"shifted_objective", r.shifted_objective},
         {"potential", r.potential},
         {"notes", r.notes}};
  if (!r.uplift.empty()) j["uplift"] = to_json(r.uplift);
  if (r.selection == "withholding") {
    j["condition_holds"] = r.condition_holds;
    j["epsilon_bound"] = r.epsilon_bound;
    j["epsilon"] = to_json(r.epsilon);
  }
  if (r.certificate) j["certificate"] = to_json(*r.certificate);
  return j;
}

EquilibriumReport report_from_json(const json& j) {
  EquilibriumReport r;
  r.mechanism = parse_mechanism(require(j, "mechanism").get<std::string>());
  r.selection = get_or<std::string>(j, "selection", "");
  r.profile = profile_from_json(require(j, "profile"));
  r.prices = hourly_table_from_json(require(j, "prices"));
  r.uplift = hourly_table_from_json(get_or<json>(j, "uplift", nullptr));
  for (const auto& a : get_or<json>(j, "accounts", json::array()))
    r.accounts.push_back(account_from_json(a));
  r.system_cost = get_or<double>(j, "system_cost", 0.0);
  r.shifted_objective = get_or<double>(j, "shifted_objective", r.system_cost);
  r.potential = get_or<double>(j, "potential", 0.0);
  r.condition_holds = get_or<bool>(j, "condition_holds", true);
  r.epsilon_bound = get_or<double>(j, "epsilon_bound", 0.0);
  r.epsilon = hourly_table_from_json(get_or<json>(j, "epsilon", nullptr));
  r.notes = get_or<std::vector<std::string>>(j, "notes", {});
  return r;
}

json to_json(const SurplusReport& r) {
  json investors = json::array();
  for (const auto& a : r.investors) investors.push_back(to_json(a));
  return {{"mechanism", std::string(to_string(r.mechanism))},
          {"uplift_payer", to_string(r.uplift_payer)},
          {"investors", investors},
          {"total_ler_profit", r.total_ler_profit},
          {"cer_revenue", r.cer_revenue},
          {"cer_cost", r.cer_cost},
          {"cer_surplus", r.cer_surplus},
          {"consumer_value", r.consumer_value},
          {"consumer_energy_payment", r.consumer_energy_payment},
          {"consumer_surplus", r.consumer_surplus},
          {"consumer_cost", r.consumer_cost},
          {"operator_penalty_intake", r.operator_penalty_intake},
          {"operator_lost_load_payment", r.operator_lost_load_payment},
          {"operator_incentive_outlay", r.operator_incentive_outlay},
          {"operator_uplift_outlay", r.operator_uplift_outlay},
          {"operator_surplus", r.operator_surplus},
          {"system_cost", r.system_cost},
          {"gross_value", r.gross_value}};
}

json to_json(const GridTopology& g) {
  json buses = json::array();
  for (const auto& b : g.buses)
    buses.push_back({{"id", b.id},
                     {"demand_share", b.demand_share},
                     {"p_bar_cv", b.cer_capacity},
                     {"slope_scale", b.slope_scale},
                     {"b_offset", b.intercept_offset},
                     {"uplift", b.uplift}});
  json lines = json::array();
  for (const auto& l : g.lines) {
    json lj{{"from", l.from}, {"to", l.to}, {"x", l.reactance}};
    if (std::isfinite(l.limit)) lj["limit"] = l.limit;
    lines.push_back(std::move(lj));
  }
  return {{"buses", buses}, {"lines", lines}, {"investor_bus", g.investor_bus}};
}

GridTopology topology_from_json(const json& j) {
  GridTopology g;
  for (const auto& b : require(j, "buses")) {
    Bus bus;
    bus.id = require(b, "id").get<std::string>();
    bus.demand_share = require(b, "demand_share").get<double>();
    bus.cer_capacity = get_or<double>(b, "p_bar_cv", 0.0);
    bus.slope_scale = get_or<double>(b, "slope_scale", 1.0);
    bus.intercept_offset = get_or<double>(b, "b_offset", 0.0);
    bus.uplift = get_or<double>(b, "uplift", 0.0);
    g.buses.push_back(std::move(bus));
  }
  for (const auto& l : get_or<json>(j, "lines", json::array())) {
    Line line;
    line.from = require(l, "from").get<std::string>();
    line.to = require(l, "to").get<std::string>();
    line.reactance = get_or<double>(l, "x", 1.0);
    line.limit = number_from(get_or<json>(l, "limit", nullptr), qp::kInf);
    g.lines.push_back(std::move(line));
  }
  g.investor_bus = get_or<std::map<std::string, std::string>>(j, "investor_bus", {});
  return g;
}

GridTopology load_topology(const std::filesystem::path& path) {
  return topology_from_json(read_json_file(path));
}

json to_json(const NetworkResult& r, const GridTopology& g) {
  json buses = json::array();
  const std::size_t B = g.buses.size();
  for (std::size_t n = 0; n < B; ++n) {
    HourlyTable angle;
    if (!r.flows.angle_by_bus_hour.empty()) {
      const std::size_t W = r.flows.angle_by_bus_hour.scenarios() / B;
      angle = HourlyTable(W, r.flows.angle_by_bus_hour.hours());
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t t = 0; t < angle.hours(); ++t)
          angle(w, t) = r.flows.angle_by_bus_hour(w * B + n, t);
    }
    buses.push_back({{"id", g.buses[n].id},
                     {"p_cv", to_json(r.cer_output_by_bus[n])},
                     {"p_sh", to_json(r.lost_load_by_bus[n])},
                     {"prices", to_json(r.prices_by_bus[n])},
                     {"angle", to_json(angle)}});
  }
  json lines = json::array();
  const std::size_t L = g.lines.size();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t W = r.flows.flow_by_line_hour.scenarios() / L;
    HourlyTable flow(W, r.flows.flow_by_line_hour.hours());
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t t = 0; t < flow.hours(); ++t)
        flow(w, t) = r.flows.flow_by_line_hour(w * L + l, t);
    lines.push_back({{"from", g.lines[l].from},
                     {"to", g.lines[l].to},
                     {"limit", number_or_null(g.lines[l].limit)},
                     {"flow", to_json(flow)}});
  }
  json accounts = json::array();
  for (const auto& a : r.accounts) accounts.push_back(to_json(a));
  return {{"selection", r.selection},
          {"system_cost", r.system_cost},
          {"profile", to_json(r.profile)},
          {"buses", buses},
          {"lines", lines},
          {"accounts", accounts},
          {"max_flow_violation", r.max_flow_violation(g)},
          {"max_injection_mismatch", r.max_injection_mismatch(g)},
          {"topology", to_json(g)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError(0, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace gridmech::io
