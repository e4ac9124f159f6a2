#include <benchmark/benchmark.h>

#include "hipi/envs.hpp"
#include "hipi/evaluation.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/verification.hpp"

using namespace hipi;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::kParallel : Execution::kSerial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "openmp" : "serial"); }

// Goal family over every cell of a slippery FourRooms: one independent backup per task.
struct FourRoomsFixture {
  GridWorld world = make_four_rooms(1, 0.1, 12);
  TaskFamily tasks = make_goal_family(world.mdp);
};

const FourRoomsFixture& four_rooms() {
  static const FourRoomsFixture fixture;
  return fixture;
}

void BM_SoftValueIteration(benchmark::State& state) {
  const auto& f = four_rooms();
  for (auto _ : state) benchmark::DoNotOptimize(soft_value_iteration(f.world.mdp, f.tasks, mode(state)));
  label(state);
}

void BM_EvaluatePolicyExact(benchmark::State& state) {
  const auto& f = four_rooms();
  static const auto policy = soft_optimal_policy(soft_value_iteration(f.world.mdp, f.tasks)).policy;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_policy_exact(policy, f.world.mdp, f.tasks, mode(state)));
  label(state);
}

void BM_EvaluatePolicyMc(benchmark::State& state) {
  const auto& f = four_rooms();
  static const auto policy = soft_optimal_policy(soft_value_iteration(f.world.mdp, f.tasks)).policy;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_policy_mc(policy, f.world.mdp, f.tasks, 20, 1, mode(state)));
  label(state);
}

void BM_VerificationSweep(benchmark::State& state) {
  SweepConfig config;
  config.instances = 24;
  config.alternatives = 5;
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(config, mode(state)));
  label(state);
}

}  // namespace

BENCHMARK(BM_SoftValueIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluatePolicyExact)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluatePolicyMc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_VerificationSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
