#pragma once

// Subcommand bodies of the gridmech CLI. Each returns a process exit code;
// library errors propagate to main, which maps them to codes.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmech/model.hpp"

namespace gridmech::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerification = 3;

/// "start:stop:step" (inclusive, no accumulated drift) or "v1,v2,...".
std::vector<double> parse_values(std::string_view text);

/// Closed bracket "lo:hi".
std::pair<double, double> parse_bracket(std::string_view text);

enum class SweepParam { Gamma, Retirement, Uplift, CapCost, NCopies, Voll };
SweepParam parse_sweep_param(std::string_view text);
std::string_view to_string(SweepParam p);

/// Instance for one sweep point. Uplift moves the instance to PIU;
/// capcost multiplies every capacity cost by (1 - value); retirement sets
/// the remaining fraction to 1 - value.
MarketInstance apply_sweep_value(const MarketInstance& base, SweepParam param, double value);

/// Threads from the flag, else GRIDMECH_THREADS, else hardware concurrency.
/// The environment variable also caps an explicit flag.
std::size_t resolve_threads(std::size_t requested);

struct FitArgs {
  std::string csv;
  double ceiling = 250.0;
  std::vector<std::string> exclude;
  std::size_t hours = 24;
  std::size_t threads = 0;
  std::string out;
  std::string csv_out;
};
int run_fit(const FitArgs& args);

struct SolveSoArgs {
  std::string instance;
  std::string topology;
  std::string out;
};
int run_solve_so(const SolveSoArgs& args);

struct SolveEqArgs {
  std::string instance;
  std::string mechanism;  // empty: the instance's own
  std::optional<double> uplift;
  double epsilon = 1e-3;  // withholding margin relative to D - remaining capacity
  bool perfect_competition = false;
  std::string topology;
  double tol = 1e-3;
  std::string out;
};
int run_solve_eq(const SolveEqArgs& args);

struct VerifyArgs {
  std::string eq;
  double tol = 1e-3;
  std::string out;
};
int run_verify(const VerifyArgs& args);

struct SurplusArgs {
  std::string eq;
  std::string payer = "consumers";
  std::string out;
  std::string json_out;
};
int run_surplus(const SurplusArgs& args);

struct SweepArgs {
  std::string param;
  std::string values;
  std::string mechanism;
  std::string instance;
  bool perfect_competition = false;
  double epsilon = 1e-3;
  std::string payer = "consumers";
  std::string break_even;  // "lo:hi"; empty disables
  std::size_t threads = 0;
  std::string out;
};
int run_sweep(const SweepArgs& args);

struct ExampleArgs {
  std::string name;
  std::string out;
  std::uint64_t seed = 1;
  std::size_t scenarios = 4;
  std::size_t hours = 24;
  double gamma = 1.0;
  std::size_t investors = 1;
};
int run_example(const ExampleArgs& args);

}  // namespace gridmech::cli
