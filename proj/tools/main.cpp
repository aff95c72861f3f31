// gridmech: command-line front end for the market-mechanism library.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver failure,
// 3 verification failure.

#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gridmech/error.hpp"
#include "json_config.hpp"

#ifndef GRIDMECH_VERSION
#define GRIDMECH_VERSION "unknown"
#endif

namespace cli = gridmech::cli;

int main(int argc, char** argv) {
  CLI::App app{"Social optimum, equilibria and surplus accounting for low-carbon market mechanisms"};
  app.config_formatter(std::make_shared<cli::JsonConfig>());
  app.set_config("--config", "", "JSON config file; flags given on the command line take precedence");
  app.set_version_flag("--version", GRIDMECH_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  int code = cli::kExitOk;

  cli::FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit CER supply slopes from market CSV data and build scenarios");
  fit_cmd->add_option("--csv", fit.csv, "Market CSV with columns timestamp,price,demand,vre")
      ->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--ceiling", fit.ceiling, "Records priced above this are left out of the fit ($/MWh)")
      ->capture_default_str();
  fit_cmd->add_option("--exclude", fit.exclude, "Cluster key (YYYY-MM) to drop; repeatable");
  fit_cmd->add_option("--hours", fit.hours, "Hours per scenario day")->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0: automatic, capped by GRIDMECH_THREADS)");
  fit_cmd->add_option("--out", fit.out, "Scenario-set JSON output ('-' for stdout)")->required();
  fit_cmd->add_option("--csv-out", fit.csv_out, "Also write the scenarios as CSV");
  fit_cmd->callback([&] { code = cli::run_fit(fit); });

  cli::SolveSoArgs so;
  auto* so_cmd = app.add_subcommand("solve-so", "Solve the system-cost minimization (social optimum)");
  so_cmd->add_option("--instance", so.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  so_cmd->add_option("--topology", so.topology, "Topology JSON for the DC network variant")
      ->check(CLI::ExistingFile);
  so_cmd->add_option("--out", so.out, "Result JSON ('-' for stdout)")->required();
  so_cmd->callback([&] { code = cli::run_solve_so(so); });

  cli::SolveEqArgs eq;
  auto* eq_cmd = app.add_subcommand("solve-eq", "Compute and certify the market outcome of a mechanism");
  eq_cmd->add_option("--instance", eq.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  eq_cmd->add_option("--mechanism", eq.mechanism, "Override the instance mechanism")
      ->check(CLI::IsMember({"mcp", "p", "pi", "piu"}));
  eq_cmd->add_option("--uplift", eq.uplift, "Uniform PIU uplift ($/MWh); implies piu");
  eq_cmd->add_option("--epsilon", eq.epsilon,
                     "MCP withholding margin as a fraction of demand minus remaining CER capacity")
      ->capture_default_str();
  eq_cmd->add_flag("--perfect-competition", eq.perfect_competition,
                   "MCP: price-taking investors (shadow prices of the social optimum)");
  eq_cmd->add_option("--topology", eq.topology, "Topology JSON for the DC network variant")
      ->check(CLI::ExistingFile);
  eq_cmd->add_option("--tol", eq.tol, "Relative best-response gain tolerance")->capture_default_str();
  eq_cmd->add_option("--out", eq.out, "Equilibrium JSON ('-' for stdout)")->required();
  eq_cmd->callback([&] { code = cli::run_solve_eq(eq); });

  cli::VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Independently re-check an equilibrium file");
  ver_cmd->add_option("--eq", ver.eq, "Equilibrium JSON from solve-eq")->required()->check(CLI::ExistingFile);
  ver_cmd->add_option("--tol", ver.tol, "Relative best-response gain tolerance")->capture_default_str();
  ver_cmd->add_option("--out", ver.out, "Certificate JSON (default stdout)");
  ver_cmd->callback([&] { code = cli::run_verify(ver); });

  cli::SurplusArgs sur;
  auto* sur_cmd = app.add_subcommand("surplus", "Participant surpluses and the conservation check");
  sur_cmd->add_option("--eq", sur.eq, "Equilibrium JSON from solve-eq")->required()->check(CLI::ExistingFile);
  sur_cmd->add_option("--payer", sur.payer, "Who funds the uplift")
      ->check(CLI::IsMember({"consumers", "operator"}))->capture_default_str();
  sur_cmd->add_option("--out", sur.out, "Surplus CSV: participant,kind,revenue,cost,surplus (default stdout)");
  sur_cmd->add_option("--json", sur.json_out, "Also write the full report as JSON");
  sur_cmd->callback([&] { code = cli::run_surplus(sur); });

  cli::SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Re-solve over a parameter grid and emit a tidy CSV");
  sw_cmd->add_option("--param", sw.param, "Swept parameter")
      ->required()->check(CLI::IsMember({"gamma", "retirement", "uplift", "capcost", "ncopies", "voll"}));
  sw_cmd->add_option("--values", sw.values, "start:stop:step (inclusive) or a comma list")->required();
  sw_cmd->add_option("--mechanism", sw.mechanism, "Override the instance mechanism")
      ->check(CLI::IsMember({"mcp", "p", "pi", "piu"}));
  sw_cmd->add_option("--instance", sw.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  sw_cmd->add_flag("--perfect-competition", sw.perfect_competition, "MCP: price-taking investors");
  sw_cmd->add_option("--epsilon", sw.epsilon, "MCP withholding margin (relative)")->capture_default_str();
  sw_cmd->add_option("--payer", sw.payer, "Who funds the uplift")
      ->check(CLI::IsMember({"consumers", "operator"}))->capture_default_str();
  sw_cmd->add_option("--break-even", sw.break_even,
                     "lo:hi bracket; adds the break-even PIU uplift of each row");
  sw_cmd->add_option("--threads", sw.threads, "Worker threads (0: automatic, capped by GRIDMECH_THREADS)");
  sw_cmd->add_option("--out", sw.out, "CSV output (default stdout)");
  sw_cmd->callback([&] { code = cli::run_sweep(sw); });

  cli::ExampleArgs ex;
  auto* ex_cmd = app.add_subcommand("example", "Write a fixture instance or topology");
  ex_cmd->add_option("name", ex.name, "toy-b, synthetic or two-bus")
      ->required()->check(CLI::IsMember({"toy-b", "synthetic", "two-bus"}));
  ex_cmd->add_option("--out", ex.out, "Output JSON (default stdout)");
  ex_cmd->add_option("--investors", ex.investors, "toy-b/two-bus: identical VRE investors")
      ->capture_default_str();
  ex_cmd->add_option("--seed", ex.seed, "synthetic: RNG seed")->capture_default_str();
  ex_cmd->add_option("--scenarios", ex.scenarios, "synthetic: scenario count")->capture_default_str();
  ex_cmd->add_option("--hours", ex.hours, "synthetic: hours per day")->capture_default_str();
  ex_cmd->add_option("--gamma", ex.gamma, "synthetic: remaining CER fraction")->capture_default_str();
  ex_cmd->callback([&] { code = cli::run_example(ex); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    // Usage errors list the flags of the subcommand that was being parsed.
    const CLI::App* active = &app;
    for (const CLI::App* sub : app.get_subcommands()) active = sub;
    std::cerr << e.what() << "\n\n" << active->help();
    return cli::kExitUsage;
  } catch (const gridmech::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return cli::kExitSolver;
  } catch (const gridmech::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "malformed JSON input: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  }
  return code;
}
