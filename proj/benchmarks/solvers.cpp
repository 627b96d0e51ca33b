#include <benchmark/benchmark.h>

#include <random>

#include "quasirobust/auxiliary.hpp"
#include "quasirobust/oracle.hpp"
#include "quasirobust/random_instance.hpp"
#include "quasirobust/robust.hpp"

using namespace quasirobust;

namespace {

FiniteMarket two_state() {
  Eigen::VectorXd s0(1), p(2);
  Eigen::MatrixXd st(2, 1);
  s0 << 1.0;
  st << 2.0, 0.5;
  p << 0.5, 0.5;
  return FiniteMarket(s0, st, p);
}

FiniteMarket random_instance(int states, int assets) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(100 * states + assets));
  RandomMarketOptions o;
  o.min_states = o.max_states = states;
  o.min_assets = o.max_assets = assets;
  return random_market(rng, o);
}

void BM_AuxiliaryPrimal(benchmark::State& state) {
  const auto m = random_instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto u = UtilitySpec::log();
  for (auto _ : state) benchmark::DoNotOptimize(solve_auxiliary_primal(m, m.reference_measure(), u, 1.0).value);
}
BENCHMARK(BM_AuxiliaryPrimal)->Args({2, 1})->Args({4, 2})->Args({8, 3})->Args({12, 4});

void BM_AuxiliaryConjugate(benchmark::State& state) {
  const auto m = random_instance(static_cast<int>(state.range(0)), 2);
  const auto u = UtilitySpec::power(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(auxiliary_conjugate(m, m.reference_measure(), u, 0.8).value);
}
BENCHMARK(BM_AuxiliaryConjugate)->Arg(3)->Arg(6)->Arg(12);

void BM_NoArbitrage(benchmark::State& state) {
  const auto m = random_instance(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(check_no_arbitrage(m).arbitrage_free);
}
BENCHMARK(BM_NoArbitrage)->Arg(4)->Arg(8)->Arg(12);

void BM_WorstCaseEntropic(benchmark::State& state) {
  const auto m = random_instance(static_cast<int>(state.range(0)), 1);
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const auto fam = MeasureFamily::simplex(m.reference_ptr());
  const Payoff g{Eigen::VectorXd::LinSpaced(m.n_states(), 0.5, 2.0), 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(worst_case_measure(m, G, fam, g, UtilitySpec::log()).second);
}
BENCHMARK(BM_WorstCaseEntropic)->Arg(2)->Arg(4)->Arg(8);

void BM_RobustPrimalSingleton(benchmark::State& state) {
  const auto m = random_instance(static_cast<int>(state.range(0)), 2);
  const auto G = AmbiguitySpec::multiple_priors(MeasureFamily::generators({m.reference_measure()}));
  const auto fam = MeasureFamily::simplex(m.reference_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(robust_primal_solve(m, G, fam, UtilitySpec::log(), 1.0).primal_value);
}
BENCHMARK(BM_RobustPrimalSingleton)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_RobustPrimalEntropic(benchmark::State& state) {
  const auto m = two_state();
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const auto fam = MeasureFamily::simplex(m.reference_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(robust_primal_solve(m, G, fam, UtilitySpec::log(), 1.0).primal_value);
}
BENCHMARK(BM_RobustPrimalEntropic)->Unit(benchmark::kMillisecond);

void BM_RobustDualValueEntropic(benchmark::State& state) {
  const auto m = two_state();
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const auto fam = MeasureFamily::simplex(m.reference_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(robust_dual_value(m, G, fam, UtilitySpec::log(), 1.0, 1.0).first);
}
BENCHMARK(BM_RobustDualValueEntropic)->Unit(benchmark::kMillisecond);

void BM_OracleU(benchmark::State& state) {
  const auto m = two_state();
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const auto fam = MeasureFamily::simplex(m.reference_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(oracle_u(m, G, fam, UtilitySpec::log(), 1.0).value);
}
BENCHMARK(BM_OracleU)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
