#include "hipi/evaluation.hpp"

#include <cmath>
#include <limits>

namespace hipi {

namespace {

void exact_task(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks, int k,
                PolicyEvaluation& out) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int T = mdp.horizon();
  std::vector<double> dist(mdp.initial_table()), next(S);
  double ret = 0.0;
  double success = 0.0;
  for (int t = 0; t < T; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (dist[s] == 0.0) continue;
      if (t + 1 == T && tasks.kind() == TaskKind::kGoal && s == tasks.goal_states()[k]) success += dist[s];
      const double* row = policy.row(k, t, s);
      for (int a = 0; a < A; ++a) {
        const double m = dist[s] * row[a];
        if (m == 0.0) continue;
        ret += m * tasks.reward(k, t, s, a);
        if (t + 1 < T) {
          for (int n = 0; n < S; ++n) next[n] += m * mdp.p(s, a, n);
        }
      }
    }
    std::swap(dist, next);
  }
  out.avg_return[k] = ret;
  out.success[k] = tasks.kind() == TaskKind::kGoal ? success : std::numeric_limits<double>::quiet_NaN();
}

void mc_task(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks, int k, int episodes,
             std::uint64_t seed, PolicyEvaluation& out) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
  double sum = 0.0, sum_sq = 0.0, hits = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto traj = rollout(policy, mdp, k, rng);
    const double r = trajectory_return(tasks, k, traj);
    sum += r;
    sum_sq += r * r;
    if (tasks.kind() == TaskKind::kGoal && traj.final_state() == tasks.goal_states()[k]) hits += 1.0;
  }
  const double n = static_cast<double>(episodes);
  const double mean = sum / n;
  const double var = episodes > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  out.avg_return[k] = mean;
  out.std_error[k] = std::sqrt(var / n);
  out.success[k] = tasks.kind() == TaskKind::kGoal ? hits / n : std::numeric_limits<double>::quiet_NaN();
}

PolicyEvaluation sized(int K) {
  PolicyEvaluation out;
  out.avg_return.assign(K, 0.0);
  out.success.assign(K, 0.0);
  out.std_error.assign(K, 0.0);
  return out;
}

}  // namespace

int sample_next_state(const TabularMdp& mdp, int s, int a, Rng& rng) {
  const auto* row = mdp.transition_table().data() + (static_cast<std::size_t>(s) * mdp.num_actions() + a) * mdp.num_states();
  return static_cast<int>(rng.categorical(std::span<const double>(row, mdp.num_states())));
}

Trajectory rollout(const TabularPolicy& policy, const TabularMdp& mdp, int task, Rng& rng) {
  Trajectory traj;
  traj.commanded_task = task;
  traj.steps.resize(mdp.horizon());
  int s = static_cast<int>(rng.categorical(mdp.initial_table()));
  for (int t = 0; t < mdp.horizon(); ++t) {
    const int a = static_cast<int>(
        rng.categorical(std::span<const double>(policy.row(task, t, s), mdp.num_actions())));
    traj.steps[t] = {s, a};
    if (t + 1 < mdp.horizon()) s = sample_next_state(mdp, s, a, rng);
  }
  return traj;
}

PolicyEvaluation evaluate_policy_exact(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                       Execution exec) {
  const int K = tasks.num_tasks();
  auto out = sized(K);
  if (exec == Execution::kSerial) {
    for (int k = 0; k < K; ++k) exact_task(policy, mdp, tasks, k, out);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < K; ++k) exact_task(policy, mdp, tasks, k, out);
  }
  return out;
}

PolicyEvaluation evaluate_policy_mc(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                    int episodes_per_task, std::uint64_t seed, Execution exec) {
  if (episodes_per_task <= 0) throw InvalidInput("episodes_per_task must be positive");
  const int K = tasks.num_tasks();
  auto out = sized(K);
  if (exec == Execution::kSerial) {
    for (int k = 0; k < K; ++k) mc_task(policy, mdp, tasks, k, episodes_per_task, seed, out);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < K; ++k) mc_task(policy, mdp, tasks, k, episodes_per_task, seed, out);
  }
  return out;
}

PolicyEvaluation evaluate_policy(const TabularPolicy& policy, const TabularMdp& mdp, const TaskFamily& tasks,
                                 int episodes_per_task, std::uint64_t seed, EvalMode mode) {
  if (mode == EvalMode::kExact) return evaluate_policy_exact(policy, mdp, tasks);
  return evaluate_policy_mc(policy, mdp, tasks, episodes_per_task, seed);
}

TabularPolicy greedy_policy(const SoftQView& q) {
  const int K = q.num_tasks, T = q.horizon, S = q.num_states, A = q.num_actions;
  std::vector<double> probs(static_cast<std::size_t>(K) * T * S * A, 0.0);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        const auto row = q.row(k, t, s);
        int best = 0;
        for (int a = 1; a < A; ++a) {
          if (row[a] > row[best]) best = a;
        }
        probs[((static_cast<std::size_t>(k) * T + t) * S + s) * A + best] = 1.0;
      }
    }
  }
  return TabularPolicy(K, T, S, A, std::move(probs));
}

}  // namespace hipi
