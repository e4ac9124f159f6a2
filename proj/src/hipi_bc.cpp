#include "hipi/hipi_bc.hpp"

#include <cmath>

#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"

namespace hipi {

void DemonstrationSet::check(const TabularMdp& mdp) const {
  if (trajectories.empty()) throw InvalidInput("demonstration set is empty");
  for (const auto& traj : trajectories) check_trajectory(mdp, traj);
}

std::string to_string(BcMode mode) {
  switch (mode) {
    case BcMode::kIrl: return "irl";
    case BcMode::kTaskAgnostic: return "task_agnostic";
    case BcMode::kUnnormalized: return "unnormalized";
  }
  return "unknown";
}

BcMode bc_mode_from_string(const std::string& name) {
  if (name == "irl") return BcMode::kIrl;
  if (name == "task_agnostic") return BcMode::kTaskAgnostic;
  if (name == "unnormalized") return BcMode::kUnnormalized;
  throw InvalidInput("unknown behavior cloning mode '" + name + "'");
}

std::vector<std::vector<double>> bc_weights(const DemonstrationSet& demos, const TabularMdp& mdp,
                                            const TaskFamily& tasks, BcMode mode, std::size_t* fallback_count) {
  demos.check(mdp);
  const std::size_t n = demos.trajectories.size();
  if (mode == BcMode::kTaskAgnostic) {
    if (fallback_count) *fallback_count = 0;
    return std::vector<std::vector<double>>(n, std::vector<double>(1, 1.0));
  }
  std::vector<double> log_z(tasks.num_tasks(), 0.0);
  if (mode == BcMode::kIrl) log_z = soft_value_iteration(mdp, tasks).log_z;
  std::vector<std::vector<double>> weights(n);
  std::vector<char> fell_back(n, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    auto post = trajectory_posterior(demos.trajectories[i], tasks, log_z);
    weights[i] = std::move(post.probs);
    fell_back[i] = post.fallback;
  }
  if (fallback_count) {
    *fallback_count = 0;
    for (char f : fell_back) *fallback_count += f;
  }
  return weights;
}

TabularPolicy fit_weighted_counts(const DemonstrationSet& demos, const std::vector<std::vector<double>>& weights,
                                  const TabularMdp& mdp, double smoothing) {
  if (weights.size() != demos.trajectories.size()) throw InvalidInput("one weight row per trajectory expected");
  if (!(smoothing >= 0.0)) throw InvalidInput("smoothing must be nonnegative");
  const int K = weights.empty() ? 1 : static_cast<int>(weights.front().size());
  const int T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  std::vector<double> counts(static_cast<std::size_t>(K) * T * S * A, 0.0);
  // One task per thread; trajectories are summed in index order so the result does
  // not depend on the thread count.
#pragma omp parallel for schedule(static)
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
      const double w = weights[i][k];
      if (w == 0.0) continue;
      const auto& steps = demos.trajectories[i].steps;
      for (int t = 0; t < T; ++t) {
        counts[((static_cast<std::size_t>(k) * T + t) * S + steps[t].state) * A + steps[t].action] += w;
      }
    }
  }
  for (std::size_t row = 0; row < counts.size(); row += A) {
    double total = 0.0;
    for (int a = 0; a < A; ++a) total += counts[row + a] + smoothing;
    for (int a = 0; a < A; ++a) counts[row + a] = total > 0.0 ? (counts[row + a] + smoothing) / total : 1.0 / A;
  }
  return TabularPolicy(K, T, S, A, std::move(counts));
}

double bc_objective(const TabularPolicy& policy, const DemonstrationSet& demos,
                    const std::vector<std::vector<double>>& weights, double smoothing) {
  double total = 0.0;
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
    const auto& steps = demos.trajectories[i].steps;
    for (int k = 0; k < static_cast<int>(weights[i].size()); ++k) {
      const double w = weights[i][k];
      if (w == 0.0) continue;
      for (int t = 0; t < static_cast<int>(steps.size()); ++t)
        total += w * std::log(policy.prob(k, t, steps[t].state, steps[t].action));
    }
  }
  if (smoothing > 0.0) {
    for (double p : policy.table()) total += smoothing * std::log(p);
  }
  return total;
}

BcResult run_hipi_bc(const DemonstrationSet& demos, const TabularMdp& mdp, const TaskFamily& tasks, BcMode mode,
                     std::uint64_t seed, const BcOptions& options) {
  BcResult result{TabularPolicy::uniform(1, 1, 1, 1), {}, 0};
  result.weights = bc_weights(demos, mdp, tasks, mode, &result.fallback_count);
  if (options.sample_labels && mode != BcMode::kTaskAgnostic) {
    for (std::size_t i = 0; i < result.weights.size(); ++i) {
      Rng rng(mix_seed(seed, i));
      const auto k = rng.categorical(result.weights[i]);
      std::fill(result.weights[i].begin(), result.weights[i].end(), 0.0);
      result.weights[i][k] = 1.0;
    }
  }
  result.policy = fit_weighted_counts(demos, result.weights, mdp, options.smoothing);
  return result;
}

}  // namespace hipi
