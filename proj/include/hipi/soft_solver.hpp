#pragma once

#include <span>
#include <vector>

#include "hipi/enumeration.hpp"
#include "hipi/mdp.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

/// Read-only view of a soft Q table laid out [task][t][s][a].
struct SoftQView {
  std::span<const double> q;
  int num_tasks = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;

  double at(int task, int t, int s, int a) const {
    return q[((static_cast<std::size_t>(task) * horizon + t) * num_states + s) * num_actions + a];
  }
  std::span<const double> row(int task, int t, int s) const {
    return q.subspan(((static_cast<std::size_t>(task) * horizon + t) * num_states + s) * num_actions, num_actions);
  }
};

/// Output of time-indexed soft value iteration.
///
///   Q[k][t][s][a] = r_k(t,s,a) + sum_s' P(s'|s,a) V[k][t+1][s']   (V[k][T][.] = 0)
///   V[k][t][s]    = log sum_a exp Q[k][t][s][a]                    (counting measure)
///   logZ[k]       = log sum_s p1(s) exp V[k][0][s]
///
/// Values at or below the family's exclusion threshold stand for -inf.
struct SoftSolution {
  int num_tasks = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  double sentinel = kDefaultSentinel;
  std::vector<double> soft_q;  // [k][t][s][a]
  std::vector<double> soft_v;  // [k][t][s], t in [0, T]
  std::vector<double> log_z;   // [k]

  double q(int k, int t, int s, int a) const {
    return soft_q[((static_cast<std::size_t>(k) * horizon + t) * num_states + s) * num_actions + a];
  }
  double v(int k, int t, int s) const {
    return soft_v[(static_cast<std::size_t>(k) * (horizon + 1) + t) * num_states + s];
  }
  SoftQView view() const { return {soft_q, num_tasks, horizon, num_states, num_actions}; }
};

/// Backward recursion for every task. The parallel path distributes tasks over
/// OpenMP threads; each task's arithmetic is identical to the serial path.
SoftSolution soft_value_iteration(const TabularMdp& mdp, const TaskFamily& tasks,
                                  Execution exec = Execution::kParallel);

/// Serial reference kept for testing and benchmarking the parallel kernel.
inline SoftSolution soft_value_iteration_serial(const TabularMdp& mdp, const TaskFamily& tasks) {
  return soft_value_iteration(mdp, tasks, Execution::kSerial);
}

/// log sum_s p1(s) exp(V[0][s]) for one task, sentinel aware.
double log_partition_from_values(const TabularMdp& mdp, std::span<const double> v0, double sentinel);

/// log sum_tau p1 prod P exp(R) with counting measure over actions: the exact
/// normalizer of exp-reward trajectory weights. Agrees with SoftSolution::log_z when
/// transitions are deterministic; exceeds it otherwise.
std::vector<double> exact_log_partition(const TabularMdp& mdp, const TaskFamily& tasks);

struct SoftPolicy {
  TabularPolicy policy;
  /// Rows whose every action was excluded; those rows are uniform.
  std::size_t fallback_rows = 0;
};

/// pi[k][t][s][a] = exp(Q - V).
SoftPolicy soft_optimal_policy(const SoftSolution& sol);

/// E_{tau ~ policy(.|task)} [ sum_t r_task - log pi(a_t|s_t,task) ] by enumeration.
double entropy_regularized_return(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                  int task, double cap = kDefaultEnumerationCap);

/// Prior-weighted average of entropy_regularized_return over tasks.
double entropy_regularized_objective(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                     double cap = kDefaultEnumerationCap);

}  // namespace hipi
