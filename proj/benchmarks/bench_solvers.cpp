#include <benchmark/benchmark.h>

#include "gridmech/equilibrium.hpp"
#include "gridmech/fixtures.hpp"
#include "gridmech/social_optimum.hpp"
#include "gridmech/verification.hpp"

namespace {

using namespace gridmech;

MarketInstance synthetic(std::size_t scenarios, MechanismKind kind) {
  SyntheticOptions o;
  o.scenarios = scenarios;
  o.seed = 11;
  o.remaining_fraction = 0.5;
  o.mechanism = kind;
  return synthetic_instance(o);
}

void BM_SocialOptimum(benchmark::State& state) {
  const auto inst = synthetic(static_cast<std::size_t>(state.range(0)), MechanismKind::Mcp);
  for (auto _ : state) benchmark::DoNotOptimize(solve_so(inst).system_cost);
  state.counters["variables"] = static_cast<double>(build_so(inst).variable_count());
}
BENCHMARK(BM_SocialOptimum)->Arg(1)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_PenaltyEquilibrium(benchmark::State& state) {
  const auto inst = replicate(synthetic(4, MechanismKind::P), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_p_equilibrium(inst).system_cost);
}
BENCHMARK(BM_PenaltyEquilibrium)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& state) {
  const auto inst = synthetic(static_cast<std::size_t>(state.range(0)), MechanismKind::P);
  const auto eq = solve_p_equilibrium(inst);
  for (auto _ : state) benchmark::DoNotOptimize(certify(inst, MechanismKind::P, eq.profile).epsilon);
}
BENCHMARK(BM_Certify)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ToyWithholding(benchmark::State& state) {
  const auto inst = toy_instance();
  const auto eps = default_withholding_margin(inst);
  for (auto _ : state) {
    const auto r = solve_mcp_withholding(inst, eps);
    WithholdingCheckOptions opt;
    opt.epsilon = eps;
    benchmark::DoNotOptimize(mcp_withholding_check(inst, r.profile, opt).passed);
  }
}
BENCHMARK(BM_ToyWithholding)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
