#pragma once

#include <cstdint>
#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/numerics.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

enum class EvalMode { kExact, kMonteCarlo };

struct PolicyEvaluation {
  std::vector<double> avg_return;  // per task
  /// Per task probability of ending on the goal; NaN for non-goal families.
  std::vector<double> success;
  /// Monte-Carlo mode only: per task standard error of avg_return.
  std::vector<double> std_error;
};

/// Exact expectation by forward propagation of the state distribution. Each task is
/// independent; the parallel path splits tasks across OpenMP threads.
PolicyEvaluation evaluate_policy_exact(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                       Execution exec = Execution::kParallel);

/// Monte-Carlo rollouts with per-task derived seeds, so results do not depend on the
/// thread count.
PolicyEvaluation evaluate_policy_mc(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                    int episodes_per_task, std::uint64_t seed, Execution exec = Execution::kParallel);

PolicyEvaluation evaluate_policy(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                 int episodes_per_task, std::uint64_t seed, EvalMode mode = EvalMode::kMonteCarlo);

/// One episode of `policy` for `task`.
Trajectory rollout(const TabularPolicy& policy, const TabularMdp& mdp, int task, Rng& rng);

/// Successor state drawn from P(.|s,a).
int sample_next_state(const TabularMdp& mdp, int s, int a, Rng& rng);

/// Deterministic argmax policy; ties go to the lowest action index.
TabularPolicy greedy_policy(const SoftQView& q);

}  // namespace hipi
