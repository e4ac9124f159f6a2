#include "hipi/verification.hpp"

#include <algorithm>
#include <cmath>

#include "hipi/envs.hpp"
#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"

namespace hipi {

namespace {

struct RelabeledPair {
  std::vector<double> log_z;
  JointDistribution before;
  JointDistribution after;
};

RelabeledPair relabeled_pair(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                             const Labeler& labeler, double cap) {
  check_enumeration_cap(mdp, cap);
  RelabeledPair out;
  out.log_z = soft_value_iteration(mdp, tasks).log_z;
  out.before = build_joint(mdp, tasks, policy, labeler, cap);
  out.after = relabel_joint(out.before, tasks, out.log_z);
  return out;
}

}  // namespace

RelabelKlResult check_relabel_kl(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                          const Labeler& labeler, double cap) {
  const auto pair = relabeled_pair(mdp, tasks, policy, labeler, cap);
  RelabelKlResult out;
  out.kl_before = joint_kl(mdp, tasks, pair.log_z, pair.before).value;
  out.kl_after = joint_kl(mdp, tasks, pair.log_z, pair.after).value;
  out.pass = out.kl_after <= out.kl_before + kVerifyTolerance;
  return out;
}

RelabelBoundResult check_relabel_bound(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                          const Labeler& labeler, double cap) {
  const auto pair = relabeled_pair(mdp, tasks, policy, labeler, cap);
  RelabelBoundResult out;
  out.kl_before = joint_kl(mdp, tasks, pair.log_z, pair.before).value;
  out.kl_after = joint_kl(mdp, tasks, pair.log_z, pair.after).value;
  out.improvement = out.kl_before - out.kl_after;
  for (std::size_t i = 0; i < pair.before.trajectories.size(); ++i) {
    const double m = pair.before.marginal(i);
    if (m <= 0.0) continue;
    out.lower_bound += m * categorical_kl(pair.before.conditional(i), pair.after.conditional(i));
  }
  out.residual = out.improvement - out.lower_bound;
  out.pass = std::isfinite(out.kl_after) && out.improvement >= out.lower_bound - kVerifyTolerance;
  if (std::isinf(out.kl_before) && std::isfinite(out.kl_after)) {
    out.residual = 0.0;
    out.pass = true;
  }
  return out;
}

OptimalityResult check_optimality(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                  int alternatives, std::uint64_t seed, double cap) {
  const auto pair = relabeled_pair(mdp, tasks, policy, commanded_labeler(tasks.num_tasks()), cap);
  OptimalityResult out;
  out.kl_posterior = joint_kl(mdp, tasks, pair.log_z, pair.after).value;
  out.min_margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < alternatives; ++j) {
    const auto labeler = random_labeler(mdp, tasks.num_tasks(), mix_seed(seed, j), j % 2 == 1);
    const double kl = joint_kl(mdp, tasks, pair.log_z, relabel_joint(pair.before, labeler)).value;
    out.min_margin = std::min(out.min_margin, kl - out.kl_posterior);
  }
  out.pass = out.min_margin >= -kVerifyTolerance;
  return out;
}

DualityResult check_duality(const TabularMdp& mdp, const TaskFamily& tasks, double cap) {
  check_enumeration_cap(mdp, cap);
  const auto sol = soft_value_iteration(mdp, tasks);
  const auto policy = soft_optimal_policy(sol).policy;
  DualityResult out;
  out.log_z = sol.log_z;
  for (int k = 0; k < tasks.num_tasks(); ++k) {
    out.soft_optimal_return.push_back(entropy_regularized_return(mdp, tasks, policy, k, cap));
    out.max_gap = std::max(out.max_gap, std::abs(out.log_z[k] - out.soft_optimal_return[k]));
  }
  out.pass = out.max_gap <= kVerifyTolerance;
  return out;
}

HerResult check_her_equivalence(const TabularMdp& mdp, double cap) {
  const auto tasks = make_goal_family(mdp);
  const auto log_z = soft_value_iteration(mdp, tasks).log_z;
  HerResult out;
  for (const auto& wt : enumerate_dynamics_support(mdp, cap)) {
    ++out.trajectories;
    const auto post = trajectory_posterior(wt.trajectory, tasks, log_z);
    const int goal = *tasks.task_for_goal(wt.trajectory.final_state());
    bool delta = !post.fallback;
    for (int k = 0; k < tasks.num_tasks(); ++k) delta = delta && post.probs[k] == (k == goal ? 1.0 : 0.0);
    if (delta) ++out.exact_deltas;
  }
  out.pass = out.trajectories > 0 && out.exact_deltas == out.trajectories;
  return out;
}

Labeler random_labeler(const TabularMdp& mdp, int num_tasks, std::uint64_t seed, bool one_hot) {
  return [mdp, num_tasks, seed, one_hot](const Trajectory& traj, int) {
    Rng rng(mix_seed(seed, trajectory_key(mdp, traj)));
    if (!one_hot) return rng.dirichlet(num_tasks, 1.0);
    std::vector<double> out(num_tasks, 0.0);
    out[rng.uniform_index(num_tasks)] = 1.0;
    return out;
  };
}

TabularPolicy random_policy(int num_tasks, int horizon, int num_states, int num_actions, std::uint64_t seed,
                            double alpha) {
  Rng rng(seed);
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(num_tasks) * horizon * num_states * num_actions);
  for (int row = 0; row < num_tasks * horizon * num_states; ++row) {
    const auto r = rng.dirichlet(num_actions, alpha);
    probs.insert(probs.end(), r.begin(), r.end());
  }
  return TabularPolicy(num_tasks, horizon, num_states, num_actions, std::move(probs));
}

BiasDemoReport bias_demo(double bias) {
  // One state, two actions, one step: each action is a trajectory.
  const TabularMdp mdp(1, 2, 1, {1.0, 1.0}, {1.0});
  const auto tasks = make_discrete_family(mdp, {{{2.0 + bias, 1.0 + bias}}, {{1.0, 2.0}}});
  BiasDemoReport out;
  out.bias = bias;
  out.log_z = soft_value_iteration(mdp, tasks).log_z;
  for (int a = 0; a < 2; ++a) {
    Trajectory traj{{{0, a}}, std::nullopt};
    std::vector<double> returns = {trajectory_return(tasks, 0, traj), trajectory_return(tasks, 1, traj)};
    out.returns.push_back(returns);
    out.normalized_posterior.push_back(trajectory_posterior(traj, tasks, out.log_z).probs);
    out.unnormalized_assignment.push_back(returns[1] > returns[0] ? 1 : 0);
    const auto& post = out.normalized_posterior.back();
    out.normalized_assignment.push_back(post[1] > post[0] ? 1 : 0);
  }
  return out;
}

SweepInstance make_sweep_instance(const SweepConfig& config, int index) {
  const std::uint64_t seed = mix_seed(config.seed, static_cast<std::uint64_t>(index));
  Rng rng(seed);
  RandomMdpSizes sizes;
  sizes.num_states = 2 + static_cast<int>(rng.uniform_index(config.max_states - 1));
  sizes.num_actions = 2 + static_cast<int>(rng.uniform_index(config.max_actions - 1));
  sizes.horizon = 1 + static_cast<int>(rng.uniform_index(config.max_horizon));
  sizes.initial = InitialKind::kOneHot;
  const int K = 2 + static_cast<int>(rng.uniform_index(config.max_tasks - 1));
  auto mdp = make_random_mdp(mix_seed(seed, 1), sizes);
  auto tasks = make_random_tasks(mdp, K, mix_seed(seed, 2));
  auto policy = random_policy(K, sizes.horizon, sizes.num_states, sizes.num_actions, mix_seed(seed, 3));
  auto labeler = random_labeler(mdp, K, mix_seed(seed, 4), index % 2 == 1);
  return {seed, std::move(mdp), std::move(tasks), std::move(policy), std::move(labeler)};
}

namespace {

SweepRecord run_instance(const SweepConfig& config, int index) {
  const auto inst = make_sweep_instance(config, index);
  SweepRecord rec;
  rec.index = index;
  rec.seed = inst.seed;
  rec.num_states = inst.mdp.num_states();
  rec.num_actions = inst.mdp.num_actions();
  rec.horizon = inst.mdp.horizon();
  rec.num_tasks = inst.tasks.num_tasks();
  rec.relabel_check = check_relabel_bound(inst.mdp, inst.tasks, inst.policy, inst.labeler);
  rec.kl_pass = rec.relabel_check.kl_after <= rec.relabel_check.kl_before + kVerifyTolerance;
  const auto duality = check_duality(inst.mdp, inst.tasks);
  rec.duality_gap = duality.max_gap;
  rec.duality_pass = duality.pass;
  rec.optimality = check_optimality(inst.mdp, inst.tasks, inst.policy, config.alternatives, mix_seed(inst.seed, 5));
  return rec;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& config, Execution exec) {
  if (config.instances < 0) throw InvalidInput("instances must be nonnegative");
  if (config.max_states < 2 || config.max_actions < 2 || config.max_horizon < 1 || config.max_tasks < 2)
    throw InvalidInput("sweep bounds too small");
  std::vector<SweepRecord> records(config.instances);
  if (exec == Execution::kSerial) {
    for (int i = 0; i < config.instances; ++i) records[i] = run_instance(config, i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < config.instances; ++i) records[i] = run_instance(config, i);
  }
  return records;
}

}  // namespace hipi
