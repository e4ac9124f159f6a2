#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "hipi/envs.hpp"
#include "hipi/evaluation.hpp"
#include "hipi/experiment.hpp"
#include "hipi/hipi_bc.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/verification.hpp"

using namespace hipi;
using namespace hipi::testing;

TEST(HipiBc, OneTrajectoryOneTaskIsSmoothedFrequency) {
  const auto mdp = single_state(2, 3);
  const auto tasks = make_discrete_family(mdp, {{{0.0, 1.0}}});
  const DemonstrationSet demos{{{{{0, 0}, {0, 0}, {0, 1}}, {}}}};
  const auto result = run_hipi_bc(demos, mdp, tasks, BcMode::kIrl, 0);
  EXPECT_NEAR(result.policy.prob(0, 0, 0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(result.policy.prob(0, 1, 0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(result.policy.prob(0, 2, 0, 1), 2.0 / 3.0, 1e-15);
}

TEST(HipiBc, UnobservedRowsAreUniform) {
  const auto chain = make_two_task_chain();
  const DemonstrationSet demos{{{{{2, 2}, {3, 2}, {4, 1}, {4, 1}}, {}}}};
  const auto result = run_hipi_bc(demos, chain.mdp, chain.tasks, BcMode::kIrl, 0);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(result.policy.prob(0, 0, 0, a), 1.0 / 3.0, 1e-15);
  const auto raw = fit_weighted_counts(demos, result.weights, chain.mdp, 0.0);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(raw.prob(1, 0, 0, a), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(raw.prob(1, 0, 2, 2), 1.0);
}

TEST(HipiBc, EmptyDemonstrationsRejected) {
  const auto chain = make_two_task_chain();
  EXPECT_THROW(run_hipi_bc({}, chain.mdp, chain.tasks, BcMode::kIrl, 0), InvalidInput);
}

TEST(HipiBc, TaskAgnosticUsesOneColumn) {
  const auto chain = make_two_task_chain();
  const auto demos = sample_demonstrations(chain.mdp, chain.tasks, 5, 1);
  const auto result = run_hipi_bc(demos, chain.mdp, chain.tasks, BcMode::kTaskAgnostic, 0);
  EXPECT_EQ(result.policy.num_tasks(), 1);
  for (const auto& row : result.weights) EXPECT_EQ(row, std::vector<double>{1.0});
}

TEST(HipiBc, SampledLabelsAreOneHot) {
  const auto chain = make_two_task_chain();
  const auto demos = sample_demonstrations(chain.mdp, chain.tasks, 10, 1);
  BcOptions options;
  options.sample_labels = true;
  const auto result = run_hipi_bc(demos, chain.mdp, chain.tasks, BcMode::kIrl, 3, options);
  for (const auto& row : result.weights) {
    EXPECT_EQ(row[0] + row[1], 1.0);
    EXPECT_TRUE(row[0] == 0.0 || row[0] == 1.0);
  }
  const auto again = run_hipi_bc(demos, chain.mdp, chain.tasks, BcMode::kIrl, 3, options);
  EXPECT_EQ(result.weights, again.weights);
}

TEST(HipiBc, GoalFamilyReducesToGoalConditionedCounting) {
  const auto world = make_open_grid(3, 3, 3);
  const auto tasks = make_goal_family(world.mdp);
  const auto demos = sample_demonstrations(world.mdp, tasks, 4, 8);
  const auto result = run_hipi_bc(demos, world.mdp, tasks, BcMode::kIrl, 0);
  std::vector<std::vector<double>> direct(demos.trajectories.size(), std::vector<double>(9, 0.0));
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i) direct[i][demos.trajectories[i].final_state()] = 1.0;
  EXPECT_EQ(result.weights, direct);
  EXPECT_EQ(result.policy.table(), fit_weighted_counts(demos, direct, world.mdp, 1.0).table());
}

TEST(HipiBcProperty, BiasLeavesIrlWeightsUnchanged) {
  const auto chain = make_two_task_chain();
  const auto demos = sample_demonstrations(chain.mdp, chain.tasks, 20, 5);
  for (double bias : {5.0, -3.0, 40.0}) {
    const auto biased = chain.tasks.with_bias(0, bias);
    const auto a = bc_weights(demos, chain.mdp, chain.tasks, BcMode::kIrl);
    const auto b = bc_weights(demos, chain.mdp, biased, BcMode::kIrl);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (int k = 0; k < 2; ++k) EXPECT_NEAR(a[i][k], b[i][k], 1e-9);
    const auto ua = bc_weights(demos, chain.mdp, chain.tasks, BcMode::kUnnormalized);
    const auto ub = bc_weights(demos, chain.mdp, biased, BcMode::kUnnormalized);
    double change = 0.0;
    for (std::size_t i = 0; i < ua.size(); ++i) change = std::max(change, std::abs(ua[i][0] - ub[i][0]));
    EXPECT_GT(change, 1e-3);
  }
}

TEST(HipiBc, UnnormalizedCollapsesOntoBiasedTask) {
  const auto chain = make_two_task_chain();
  const auto biased = chain.tasks.with_bias(0, 5.0);
  const auto demos = sample_demonstrations(chain.mdp, chain.tasks, 20, 5);
  const auto w = bc_weights(demos, chain.mdp, biased, BcMode::kUnnormalized);
  double mass = 0.0;
  for (const auto& row : w) mass += row[0];
  EXPECT_GT(mass / static_cast<double>(w.size()), 0.99);
}

TEST(HipiBcProperty, WeightedCountsMaximizeObjective) {
  const auto chain = make_two_task_chain();
  const auto demos = sample_demonstrations(chain.mdp, chain.tasks, 6, 2);
  const auto weights = bc_weights(demos, chain.mdp, chain.tasks, BcMode::kIrl);
  const auto best = fit_weighted_counts(demos, weights, chain.mdp, 1.0);
  const double top = bc_objective(best, demos, weights, 1.0);
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto perturbed = best;
    const int k = static_cast<int>(rng.uniform_index(2));
    const int t = static_cast<int>(rng.uniform_index(4));
    const int s = static_cast<int>(rng.uniform_index(5));
    const int from = static_cast<int>(rng.uniform_index(3));
    const int to = (from + 1 + static_cast<int>(rng.uniform_index(2))) % 3;
    double* row = perturbed.mutable_row(k, t, s);
    const double delta = row[from] * (0.01 + 0.5 * rng.uniform());
    row[from] -= delta;
    row[to] += delta;
    EXPECT_LT(bc_objective(perturbed, demos, weights, 1.0), top);
  }
}

TEST(HipiBc, ModeNames) {
  for (auto mode : {BcMode::kIrl, BcMode::kTaskAgnostic, BcMode::kUnnormalized})
    EXPECT_EQ(bc_mode_from_string(to_string(mode)), mode);
  EXPECT_THROW(bc_mode_from_string("gcsl"), InvalidInput);
}

TEST(EvaluatePolicy, SoftOptimalExactMatchesEnumeration) {
  const auto mdp = make_random_mdp(6, {3, 2, 3});
  const auto tasks = make_random_tasks(mdp, 2, 6);
  const auto pi = soft_optimal_policy(soft_value_iteration(mdp, tasks)).policy;
  const auto eval = evaluate_policy_exact(pi, mdp, tasks);
  for (int k = 0; k < 2; ++k) {
    double expected = 0.0;
    for (const auto& wt : enumerate_trajectories(mdp, pi, k)) expected += wt.probability * trajectory_return(tasks, k, wt.trajectory);
    EXPECT_NEAR(eval.avg_return[k], expected, 1e-12);
    EXPECT_TRUE(std::isnan(eval.success[k]));
  }
}

TEST(EvaluatePolicy, UniformPolicyZeroRewardIsZero) {
  const auto mdp = make_random_mdp(1, {3, 2, 3});
  const auto tasks = make_discrete_family(mdp, {StationaryReward(3, std::vector<double>(2, 0.0))});
  const auto pi = TabularPolicy::uniform(1, 1, 3, 2);
  EXPECT_EQ(evaluate_policy_exact(pi, mdp, tasks).avg_return[0], 0.0);
  EXPECT_EQ(evaluate_policy(pi, mdp, tasks, 100, 0).avg_return[0], 0.0);
}

TEST(EvaluatePolicy, MonteCarloWithinThreeSigma) {
  const auto mdp = make_random_mdp(2, {4, 3, 4});
  const auto tasks = make_random_tasks(mdp, 3, 2);
  const auto pi = random_policy(3, 4, 4, 3, 5);
  const auto exact = evaluate_policy(pi, mdp, tasks, 0, 0, EvalMode::kExact);
  const auto mc = evaluate_policy(pi, mdp, tasks, 10000, 31);
  for (int k = 0; k < 3; ++k) {
    EXPECT_GT(mc.std_error[k], 0.0);
    EXPECT_LT(std::abs(mc.avg_return[k] - exact.avg_return[k]), 3 * mc.std_error[k]);
  }
}

TEST(EvaluatePolicy, GoalSuccessMatchesEnumeration) {
  const auto world = make_open_grid(2, 3, 3, 0.2);
  const auto tasks = make_goal_family(world.mdp);
  const auto pi = TabularPolicy::uniform(1, 1, 6, kGridActions);
  const auto eval = evaluate_policy_exact(pi, world.mdp, tasks);
  for (int k = 0; k < 6; ++k) {
    double reach = 0.0;
    for (const auto& wt : enumerate_trajectories(world.mdp, pi, k))
      if (wt.trajectory.final_state() == k) reach += wt.probability;
    EXPECT_NEAR(eval.success[k], reach, 1e-12);
  }
}

TEST(EvaluatePolicy, ParallelMatchesSerial) {
  const auto world = make_four_rooms(1, 0.1, 10);
  const auto tasks = make_goal_family(world.mdp);
  const auto pi = soft_optimal_policy(soft_value_iteration(world.mdp, tasks)).policy;
  const auto a = evaluate_policy_exact(pi, world.mdp, tasks, Execution::kSerial);
  const auto b = evaluate_policy_exact(pi, world.mdp, tasks, Execution::kParallel);
  EXPECT_EQ(a.avg_return, b.avg_return);
  const auto c = evaluate_policy_mc(pi, world.mdp, tasks, 50, 3, Execution::kSerial);
  const auto d = evaluate_policy_mc(pi, world.mdp, tasks, 50, 3, Execution::kParallel);
  EXPECT_EQ(c.avg_return, d.avg_return);
  EXPECT_EQ(c.success, d.success);
}

TEST(GreedyPolicy, TiesGoToLowestAction) {
  const std::vector<double> q = {1.0, 2.0, 2.0};
  const SoftQView view{q, 1, 1, 1, 3};
  const auto pi = greedy_policy(view);
  EXPECT_EQ(pi.prob(0, 0, 0, 1), 1.0);
  EXPECT_EQ(pi.prob(0, 0, 0, 2), 0.0);
}
