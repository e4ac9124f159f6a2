#include "hipi/soft_solver.hpp"

#include <algorithm>
#include <cmath>

namespace hipi {

namespace {

void solve_task(const TabularMdp& mdp, const TaskFamily& tasks, int k, SoftSolution& sol) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int T = mdp.horizon();
  const double sentinel = tasks.sentinel();
  double* v_task = sol.soft_v.data() + static_cast<std::size_t>(k) * (T + 1) * S;
  double* q_task = sol.soft_q.data() + static_cast<std::size_t>(k) * T * S * A;
  std::fill(v_task + static_cast<std::size_t>(T) * S, v_task + static_cast<std::size_t>(T + 1) * S, 0.0);

  for (int t = T - 1; t >= 0; --t) {
    const double* v_next = v_task + static_cast<std::size_t>(t + 1) * S;
    for (int s = 0; s < S; ++s) {
      double* q_row = q_task + (static_cast<std::size_t>(t) * S + s) * A;
      for (int a = 0; a < A; ++a) {
        double backup = 0.0;
        for (int next = 0; next < S; ++next) {
          const double p = mdp.p(s, a, next);
          if (p != 0.0) backup += p * v_next[next];
        }
        q_row[a] = std::max(tasks.reward(k, t, s, a) + backup, sentinel);
      }
      v_task[static_cast<std::size_t>(t) * S + s] = sentinel_log_sum_exp(std::span<const double>(q_row, A), sentinel);
    }
  }
  sol.log_z[k] = log_partition_from_values(mdp, std::span<const double>(v_task, S), sentinel);
}

}  // namespace

double log_partition_from_values(const TabularMdp& mdp, std::span<const double> v0, double sentinel) {
  std::vector<double> terms(mdp.num_states(), sentinel);
  const double threshold = exclusion_threshold(sentinel);
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.initial(s) > 0.0 && v0[s] > threshold) terms[s] = std::log(mdp.initial(s)) + v0[s];
  }
  return sentinel_log_sum_exp(terms, sentinel);
}

SoftSolution soft_value_iteration(const TabularMdp& mdp, const TaskFamily& tasks, Execution exec) {
  if (tasks.num_states() != mdp.num_states() || tasks.num_actions() != mdp.num_actions() ||
      tasks.horizon() != mdp.horizon())
    throw InvalidInput("task family shape does not match the MDP");
  SoftSolution sol;
  sol.num_tasks = tasks.num_tasks();
  sol.horizon = mdp.horizon();
  sol.num_states = mdp.num_states();
  sol.num_actions = mdp.num_actions();
  sol.sentinel = tasks.sentinel();
  sol.soft_q.resize(static_cast<std::size_t>(sol.num_tasks) * sol.horizon * sol.num_states * sol.num_actions);
  sol.soft_v.resize(static_cast<std::size_t>(sol.num_tasks) * (sol.horizon + 1) * sol.num_states);
  sol.log_z.resize(sol.num_tasks);

  const int K = sol.num_tasks;
  if (exec == Execution::kSerial) {
    for (int k = 0; k < K; ++k) solve_task(mdp, tasks, k, sol);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < K; ++k) solve_task(mdp, tasks, k, sol);
  }
  return sol;
}

std::vector<double> exact_log_partition(const TabularMdp& mdp, const TaskFamily& tasks) {
  // W[t][s] = log sum_a exp(r) * sum_s' P exp(W[t+1][s']): the dynamics are averaged
  // inside the exponential rather than outside it.
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int T = mdp.horizon();
  const double sentinel = tasks.sentinel();
  const double threshold = tasks.threshold();
  std::vector<double> out(tasks.num_tasks());
  std::vector<double> w_next(S), w(S), terms(A), inner(S);
  for (int k = 0; k < tasks.num_tasks(); ++k) {
    std::fill(w_next.begin(), w_next.end(), 0.0);
    for (int t = T - 1; t >= 0; --t) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          for (int next = 0; next < S; ++next) {
            const double p = mdp.p(s, a, next);
            inner[next] = (p > 0.0 && w_next[next] > threshold) ? std::log(p) + w_next[next] : sentinel;
          }
          const double cont = t + 1 == T ? 0.0 : sentinel_log_sum_exp(inner, sentinel);
          const double r = tasks.reward(k, t, s, a);
          terms[a] = (r > threshold && cont > threshold) ? r + cont : sentinel;
        }
        w[s] = sentinel_log_sum_exp(terms, sentinel);
      }
      std::swap(w, w_next);
    }
    out[k] = log_partition_from_values(mdp, w_next, sentinel);
  }
  return out;
}

SoftPolicy soft_optimal_policy(const SoftSolution& sol) {
  const int K = sol.num_tasks, T = sol.horizon, S = sol.num_states, A = sol.num_actions;
  std::vector<double> probs(static_cast<std::size_t>(K) * T * S * A);
  std::size_t fallback_rows = 0;
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        const auto q_row = sol.view().row(k, t, s);
        bool fallback = false;
        const auto row = sentinel_softmax(q_row, {}, sol.sentinel, &fallback);
        if (fallback) ++fallback_rows;
        std::copy(row.begin(), row.end(), probs.begin() + ((static_cast<std::size_t>(k) * T + t) * S + s) * A);
      }
    }
  }
  return {TabularPolicy(K, T, S, A, std::move(probs)), fallback_rows};
}

double entropy_regularized_return(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                  int task, double cap) {
  const auto trajectories = enumerate_trajectories(mdp, policy, task, cap);
  double total = 0.0;
  for (const auto& wt : trajectories) {
    double value = trajectory_return(tasks, task, wt.trajectory);
    for (int t = 0; t < mdp.horizon(); ++t) {
      const auto& step = wt.trajectory.steps[t];
      value -= std::log(policy.prob(task, t, step.state, step.action));
    }
    total += wt.probability * value;
  }
  return total;
}

double entropy_regularized_objective(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                     double cap) {
  double total = 0.0;
  for (int k = 0; k < tasks.num_tasks(); ++k) {
    if (tasks.prior(k) == 0.0) continue;
    total += tasks.prior(k) * entropy_regularized_return(mdp, tasks, policy, k, cap);
  }
  return total;
}

}  // namespace hipi
