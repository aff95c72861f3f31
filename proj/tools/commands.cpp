#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "gridmech/equilibrium.hpp"
#include "gridmech/error.hpp"
#include "gridmech/fixtures.hpp"
#include "gridmech/instance_io.hpp"
#include "gridmech/network.hpp"
#include "gridmech/social_optimum.hpp"
#include "gridmech/supply_curve.hpp"
#include "gridmech/surplus.hpp"
#include "gridmech/verification.hpp"
#include "manifest.hpp"

namespace gridmech::cli {
namespace {

namespace fs = std::filesystem;
using namespace gridmech::io;
using nlohmann::json;

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParameterError("not a number: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= text.size(); ++k)
    if (k == text.size() || text[k] == sep) {
      parts.push_back(text.substr(start, k - start));
      start = k + 1;
    }
  return parts;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

double expected_sum(const MarketInstance& inst, const HourlyTable& table) {
  if (table.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t w = 0; w < inst.scenario_count(); ++w) {
    const double rho = inst.scenarios()[w].probability;
    for (double v : table.row(w)) s += rho * v;
  }
  return s;
}

HourlyTable relative_margin(const MarketInstance& inst, double rel) {
  if (!(rel > 0.0 && rel < 1.0)) throw ParameterError("--epsilon must lie in (0, 1)");
  HourlyTable eps(inst.scenario_count(), inst.hours());
  const double cap = inst.system().remaining_capacity();
  for (std::size_t w = 0; w < inst.scenario_count(); ++w)
    for (std::size_t t = 0; t < inst.hours(); ++t)
      eps(w, t) = rel * (inst.scenarios()[w].demand[t] - cap);
  return eps;
}

/// Loads an instance and applies the mechanism and uplift overrides.
MarketInstance configured_instance(const std::string& path, const std::string& mechanism,
                                   std::optional<double> uplift) {
  MarketInstance inst = load_instance(path);
  if (!mechanism.empty()) {
    MechanismSpec spec = inst.mechanism();
    spec.kind = parse_mechanism(mechanism);
    if (spec.kind != MechanismKind::Piu) spec.uplift = {};
    inst = inst.with_mechanism(spec);
  }
  if (uplift) {
    if (!mechanism.empty() && inst.mechanism().kind != MechanismKind::Piu)
      throw ParameterError("--uplift applies to the piu mechanism only");
    inst = with_uniform_uplift(inst, *uplift);
  }
  return inst;
}

/// Outcome of the mechanism on a single-node instance.
EquilibriumReport solve_outcome(const MarketInstance& inst, bool competitive, double eps_rel) {
  if (inst.mechanism().kind == MechanismKind::Mcp)
    return competitive ? solve_mcp_competitive(inst)
                       : solve_mcp_withholding(inst, relative_margin(inst, eps_rel));
  return solve_equilibrium(inst);
}

json zero_profit_json(const ProfitCheck& check) {
  json j = {{"passed", check.passed}, {"tolerance", check.tolerance}};
  for (std::size_t k = 0; k < check.ids.size(); ++k)
    j["profits"][check.ids[k]] = check.profits[k];
  return j;
}

bool within(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

NetworkResult solve_network(const MarketInstance& inst, const GridTopology& g) {
  return inst.mechanism().kind == MechanismKind::Mcp ? solve_so_network(inst, g)
                                                     : solve_network_p_equilibrium(inst, g);
}

}  // namespace

std::vector<double> parse_values(std::string_view text) {
  if (text.empty()) throw ParameterError("empty value list");
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ParameterError("range must be start:stop:step");
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0) || stop < start) throw ParameterError("range needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 1000000) throw ParameterError("range has too many points");
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) values[k] = start + static_cast<double>(k) * step;
    return values;
  }
  std::vector<double> values;
  for (auto part : split(text, ',')) values.push_back(parse_number(part));
  return values;
}

std::pair<double, double> parse_bracket(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ParameterError("bracket must be lo:hi");
  const double lo = parse_number(parts[0]);
  const double hi = parse_number(parts[1]);
  if (!(hi > lo)) throw ParameterError("bracket needs hi > lo");
  return {lo, hi};
}

SweepParam parse_sweep_param(std::string_view text) {
  if (text == "gamma") return SweepParam::Gamma;
  if (text == "retirement") return SweepParam::Retirement;
  if (text == "uplift") return SweepParam::Uplift;
  if (text == "capcost") return SweepParam::CapCost;
  if (text == "ncopies") return SweepParam::NCopies;
  if (text == "voll") return SweepParam::Voll;
  throw ParameterError("unknown sweep parameter '" + std::string(text) + "'");
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Gamma: return "gamma";
    case SweepParam::Retirement: return "retirement";
    case SweepParam::Uplift: return "uplift";
    case SweepParam::CapCost: return "capcost";
    case SweepParam::NCopies: return "ncopies";
    case SweepParam::Voll: return "voll";
  }
  return "?";
}

MarketInstance apply_sweep_value(const MarketInstance& base, SweepParam param, double value) {
  SystemParams sys = base.system();
  switch (param) {
    case SweepParam::Gamma:
      sys.remaining_fraction = value;
      return base.with_system(sys);
    case SweepParam::Retirement:
      sys.remaining_fraction = 1.0 - value;
      return base.with_system(sys);
    case SweepParam::Voll:
      sys.voll = value;
      return base.with_system(sys);
    case SweepParam::Uplift:
      return with_uniform_uplift(base, value);
    case SweepParam::CapCost: {
      if (!(value < 1.0)) throw ParameterError("capital cost reduction must be < 1");
      const double f = 1.0 - value;
      std::vector<VreSpec> vre(base.vre().begin(), base.vre().end());
      std::vector<EsSpec> es(base.es().begin(), base.es().end());
      for (auto& v : vre) v.capacity_cost *= f;
      for (auto& e : es) {
        e.energy_cost *= f;
        e.power_cost *= f;
      }
      return base.with_investors(std::move(vre), std::move(es));
    }
    case SweepParam::NCopies: {
      const double n = std::round(value);
      if (n < 1.0 || std::abs(n - value) > 1e-9) throw ParameterError("copies must be a positive integer");
      return replicate(base, static_cast<std::size_t>(n));
    }
  }
  return base;
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRIDMECH_THREADS")) {
    const double cap = parse_number(env);
    if (cap >= 1.0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

int run_fit(const FitArgs& args) {
  RunManifest manifest("fit", {{"csv", args.csv},
                               {"ceiling", args.ceiling},
                               {"exclude", args.exclude},
                               {"hours", args.hours}});
  manifest.add_input(args.csv);
  const auto records = supply::load_market_csv(args.csv);
  supply::ClusterPlan plan;
  plan.price_ceiling = args.ceiling;
  plan.excluded = args.exclude;
  const auto fits = supply::fit_clusters(records, plan, resolve_threads(args.threads));
  json fit_json = json::array();
  for (const auto& f : fits) {
    if (f.fit.non_positive)
      std::cerr << "warning: cluster " << f.key << " has non-positive slope " << f.fit.slope << "\n";
    fit_json.push_back({{"cluster", f.key},
                        {"slope", f.fit.slope},
                        {"constant", f.fit.intercept},
                        {"points", f.fit.points},
                        {"non_positive", f.fit.non_positive}});
  }
  supply::ScenarioBuildOptions build;
  build.hours_per_day = args.hours;
  const ScenarioSet scenarios = supply::build_scenarios(records, plan, supply::slope_map(fits), build);
  json out = to_json(scenarios);
  out["fits"] = fit_json;
  out["manifest"] = manifest.to_json();
  write_json(args.out, out);
  if (!args.csv_out.empty()) {
    std::ostringstream os;
    write_scenarios_csv(os, scenarios);
    write_text(args.csv_out, os.str());
  }
  std::cerr << "fit: " << fits.size() << " clusters, " << scenarios.size() << " scenarios\n";
  return kExitOk;
}

int run_solve_so(const SolveSoArgs& args) {
  RunManifest manifest("solve-so", {{"instance", args.instance}, {"topology", args.topology}});
  manifest.add_input(args.instance);
  manifest.set_settings(default_model_settings());
  const MarketInstance inst = load_instance(args.instance);
  json out = {{"instance", to_json(inst)}};
  if (!args.topology.empty()) {
    manifest.add_input(args.topology);
    const GridTopology g = load_topology(args.topology);
    g.validate(inst);
    out["topology"] = to_json(g);
    out["network"] = to_json(solve_so_network(inst, g), g);
  } else {
    out["result"] = to_json(solve_so(inst));
  }
  out["manifest"] = manifest.to_json();
  write_json(args.out, out);
  return kExitOk;
}

int run_solve_eq(const SolveEqArgs& args) {
  json config = {{"instance", args.instance},
                 {"mechanism", args.mechanism},
                 {"epsilon", args.epsilon},
                 {"perfect_competition", args.perfect_competition},
                 {"topology", args.topology},
                 {"tol", args.tol}};
  if (args.uplift) config["uplift"] = *args.uplift;
  RunManifest manifest("solve-eq", config);
  manifest.add_input(args.instance);
  manifest.set_settings(EquilibriumOptions{}.settings);
  const MarketInstance inst = configured_instance(args.instance, args.mechanism, args.uplift);
  json out = {{"instance", to_json(inst)}};
  int code = kExitOk;

  if (!args.topology.empty()) {
    manifest.add_input(args.topology);
    const GridTopology g = load_topology(args.topology);
    g.validate(inst);
    const NetworkResult res = solve_network(inst, g);
    out["topology"] = to_json(g);
    out["network"] = to_json(res, g);
  } else {
    EquilibriumReport report = solve_outcome(inst, args.perfect_competition, args.epsilon);
    const MechanismKind kind = inst.mechanism().kind;
    if (kind == MechanismKind::Mcp && args.perfect_competition) {
      const ProfitCheck check = zero_profit_check(solve_so(inst), inst);
      out["zero_profit"] = zero_profit_json(check);
      if (!check.passed) code = kExitVerification;
    } else if (kind == MechanismKind::Mcp) {
      WithholdingCheckOptions opt;
      opt.epsilon = report.epsilon;
      report.certificate = mcp_withholding_check(inst, report.profile, opt);
    } else {
      CertifyOptions opt;
      opt.rel_tol = args.tol;
      report.certificate = certify(inst, kind, report.profile, opt);
    }
    if (report.certificate && !report.certificate->passed) code = kExitVerification;
    out["report"] = to_json(report);
  }
  out["manifest"] = manifest.to_json();
  write_json(args.out, out);
  if (code != kExitOk) std::cerr << "solve-eq: equilibrium certificate failed\n";
  return code;
}

int run_verify(const VerifyArgs& args) {
  RunManifest manifest("verify", {{"eq", args.eq}, {"tol", args.tol}});
  manifest.add_input(args.eq);
  const json file = read_json_file(args.eq);
  if (!file.contains("instance")) throw ParameterError("equilibrium file lacks an instance");
  const MarketInstance inst =
      instance_from_json(file.at("instance"), fs::path(args.eq).parent_path());
  json checks = json::object();
  bool passed = true;
  auto record = [&](const std::string& name, bool ok, json detail) {
    detail["passed"] = ok;
    checks[name] = std::move(detail);
    passed = passed && ok;
  };

  if (file.contains("network")) {
    // Re-solve and compare: equilibrium certification is not defined on networks.
    const GridTopology g = topology_from_json(file.at("topology"));
    g.validate(inst);
    const NetworkResult res = solve_network(inst, g);
    const double stored = file.at("network").at("system_cost").get<double>();
    record("system_cost", within(stored, res.system_cost, 1e-6),
           {{"reported", stored}, {"recomputed", res.system_cost}});
    const double viol = res.max_flow_violation(g);
    record("line_limits", viol <= 1e-6, {{"max_violation", viol}});
  } else {
    const EquilibriumReport report = report_from_json(file.at("report"));
    const MechanismKind kind = report.mechanism;
    if (kind != inst.mechanism().kind) throw ParameterError("report and instance disagree on mechanism");

    const double cost = system_cost(inst, report.profile);
    record("system_cost", within(cost, report.system_cost, 1e-6),
           {{"reported", report.system_cost}, {"recomputed", cost}});

    double worst = 0.0;
    bool accounts_ok = report.accounts.size() == inst.investor_count();
    for (std::size_t i = 0; accounts_ok && i < report.accounts.size(); ++i) {
      const InvestorAccount& a = report.accounts[i];
      const double scale = std::max(1.0, std::abs(a.profit));
      double gap = std::abs(a.profit - a.recomputed_profit());
      if (kind != MechanismKind::Mcp)
        gap = std::max(gap, std::abs(a.profit - mechanism_profit(inst, kind, report.profile, i)));
      worst = std::max(worst, gap / scale);
    }
    accounts_ok = accounts_ok && worst <= 1e-6;
    record("accounts", accounts_ok, {{"max_relative_gap", worst}});

    if (kind == MechanismKind::Mcp && report.selection == "social-optimum") {
      const SoResult so = solve_so(inst);
      const double diff = max_decision_difference(with_pro_rata_sales(inst, so.profile), report.profile);
      record("social_optimum", diff <= 1e-5 * std::max(1.0, inst.scenarios()[0].demand[0]),
             {{"max_decision_difference", diff}});
      const ProfitCheck zp = zero_profit_check(so, inst);
      record("zero_profit", zp.passed, zero_profit_json(zp));
    } else {
      NashCertificate cert;
      if (kind == MechanismKind::Mcp) {
        WithholdingCheckOptions opt;
        opt.epsilon = report.epsilon;
        cert = mcp_withholding_check(inst, report.profile, opt);
      } else {
        CertifyOptions opt;
        opt.rel_tol = args.tol;
        cert = certify(inst, kind, report.profile, opt);
      }
      checks["certificate"] = to_json(cert);
      passed = passed && cert.passed;
    }
  }

  json out = {{"passed", passed}, {"checks", checks}, {"manifest", manifest.to_json()}};
  write_json(args.out, out);
  if (!passed) std::cerr << "verify: FAILED\n";
  return passed ? kExitOk : kExitVerification;
}

int run_surplus(const SurplusArgs& args) {
  RunManifest manifest("surplus", {{"eq", args.eq}, {"payer", args.payer}});
  manifest.add_input(args.eq);
  const json file = read_json_file(args.eq);
  if (!file.contains("report")) throw UnsupportedError("surplus needs a single-node equilibrium file");
  const MarketInstance inst =
      instance_from_json(file.at("instance"), fs::path(args.eq).parent_path());
  const EquilibriumReport report = report_from_json(file.at("report"));
  const SurplusReport s = surplus_report(inst, report, parse_uplift_payer(args.payer));
  const ConservationResult c = conservation_check(s);
  const json m = manifest.to_json();

  std::ostringstream os;
  os << "# " << m.dump() << "\n";
  write_surplus_csv(os, s);
  write_text(args.out, os.str());
  if (!args.json_out.empty())
    write_json(args.json_out, {{"surplus", to_json(s)},
                               {"conservation",
                                {{"passed", c.passed},
                                 {"energy_market_gap", c.energy_market_gap},
                                 {"operator_books_gap", c.operator_books_gap},
                                 {"investor_books_gap", c.investor_books_gap},
                                 {"welfare_gap", c.welfare_gap},
                                 {"tolerance", c.tolerance}}},
                               {"manifest", m}});
  if (!c.passed) {
    std::cerr << "surplus: conservation check failed (welfare gap " << c.welfare_gap << ")\n";
    return kExitVerification;
  }
  return kExitOk;
}

int run_sweep(const SweepArgs& args) {
  const SweepParam param = parse_sweep_param(args.param);
  const std::vector<double> values = parse_values(args.values);
  const UpliftPayer payer = parse_uplift_payer(args.payer);
  std::optional<std::pair<double, double>> bracket;
  if (!args.break_even.empty()) bracket = parse_bracket(args.break_even);
  std::mutex warn_mutex;
  if (param == SweepParam::Uplift && !args.mechanism.empty() && args.mechanism != "piu")
    throw ParameterError("an uplift sweep runs under the piu mechanism");

  const std::size_t threads = resolve_threads(args.threads);
  RunManifest manifest("sweep", {{"param", args.param},
                                 {"values", args.values},
                                 {"mechanism", args.mechanism},
                                 {"instance", args.instance},
                                 {"perfect_competition", args.perfect_competition},
                                 {"epsilon", args.epsilon},
                                 {"payer", args.payer},
                                 {"break_even", args.break_even}});
  manifest.add_input(args.instance);
  manifest.set_settings(EquilibriumOptions{}.settings);
  const MarketInstance base = configured_instance(args.instance, args.mechanism, std::nullopt);

  // Per-investor capacity columns only when the fleet is fixed across rows.
  std::vector<std::string> cap_cols;
  if (param != SweepParam::NCopies) {
    for (const auto& v : base.vre()) cap_cols.push_back("X_" + v.id);
    for (const auto& e : base.es()) {
      cap_cols.push_back("S_" + e.id);
      cap_cols.push_back("P_" + e.id);
    }
  }

  // A bracket without a sign change leaves the cells as nan rather than
  // failing the whole sweep.
  auto break_even_row = [&](const MarketInstance& inst) {
    try {
      return break_even_uplift(inst, bracket->first, bracket->second);
    } catch (const ParameterError& e) {
      std::lock_guard lock(warn_mutex);
      std::cerr << "warning: no break-even uplift in [" << bracket->first << ", "
                << bracket->second << "]: " << e.what() << "\n";
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return BreakEven{nan, nan, 0};
    }
  };
  // Under an uplift sweep every row shares the base instance's break-even.
  std::optional<BreakEven> shared_break_even;
  if (bracket && param == SweepParam::Uplift) shared_break_even = break_even_row(base);

  std::vector<std::vector<double>> rows(values.size());
  std::vector<std::string> mech_names(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < values.size(); k = next++) {
      try {
        const MarketInstance inst = apply_sweep_value(base, param, values[k]);
        const EquilibriumReport r = solve_outcome(inst, args.perfect_competition, args.epsilon);
        const SurplusReport s = surplus_report(inst, r, payer);
        double X = 0.0, S = 0.0, P = 0.0;
        std::vector<double> caps;
        for (const auto& v : r.profile.vre) {
          X += v.capacity;
          caps.push_back(v.capacity);
        }
        for (const auto& e : r.profile.es) {
          S += e.energy_capacity;
          P += e.power_capacity;
          caps.push_back(e.energy_capacity);
          caps.push_back(e.power_capacity);
        }
        std::vector<double> row = {values[k],       s.system_cost,      s.total_ler_profit,
                                   s.consumer_cost, s.consumer_surplus, s.cer_surplus,
                                   s.operator_surplus, expected_sum(inst, r.profile.lost_load),
                                   X, S, P};
        if (!cap_cols.empty()) row.insert(row.end(), caps.begin(), caps.end());
        if (bracket) {
          const BreakEven be = shared_break_even ? *shared_break_even : break_even_row(inst);
          row.push_back(be.uplift);
          row.push_back(be.total_profit);
        }
        mech_names[k] = std::string(gridmech::to_string(inst.mechanism().kind));
        rows[k] = std::move(row);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(threads, values.size());
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::ostringstream os;
  os << "# " << manifest.to_json().dump() << "\n";
  os << "mechanism," << to_string(param)
     << ",system_cost,total_ler_profit,consumer_cost,consumer_surplus,cer_profit,"
        "operator_surplus,lost_load,vre_capacity,es_energy_capacity,es_power_capacity";
  for (const auto& c : cap_cols) os << ',' << c;
  if (bracket) os << ",break_even_uplift,break_even_profit";
  os << "\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    os << mech_names[k];
    for (double v : rows[k]) os << ',' << format_number(v);
    os << "\n";
  }
  write_text(args.out, os.str());
  return kExitOk;
}

int run_example(const ExampleArgs& args) {
  json out;
  if (args.name == "toy-b") {
    ToyOptions o;
    o.investors = args.investors;
    out = to_json(toy_instance(o));
  } else if (args.name == "synthetic") {
    SyntheticOptions o;
    o.seed = args.seed;
    o.scenarios = args.scenarios;
    o.hours = args.hours;
    o.remaining_fraction = args.gamma;
    out = to_json(synthetic_instance(o));
  } else if (args.name == "two-bus") {
    // TOY-B split over two buses: all CER at "west", every investor at
    // "east", and a 5 MW line that binds at the optimum.
    ToyOptions o;
    o.investors = args.investors;
    const MarketInstance inst = toy_instance(o);
    GridTopology g;
    g.buses.push_back({"west", 0.5, inst.system().initial_cer_capacity, 1.0, 0.0, 0.0});
    g.buses.push_back({"east", 0.5, 0.0, 1.0, 0.0, 0.0});
    g.lines.push_back({"west", "east", 0.1, 5.0});
    for (std::size_t i = 0; i < inst.investor_count(); ++i)
      g.investor_bus[inst.investor_id(inst.investor(i))] = "east";
    g.validate(inst);
    out = to_json(g);
  } else {
    throw ParameterError("unknown example '" + args.name + "' (toy-b, synthetic, two-bus)");
  }
  write_json(args.out, out);
  return kExitOk;
}

}  // namespace gridmech::cli
