#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "hipi/enumeration.hpp"
#include "hipi/envs.hpp"
#include "hipi/joint.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/verification.hpp"

using namespace hipi;
using namespace hipi::testing;

namespace {

// Independent oracle: log of sum over the dynamics support of exp(R).
double enumerated_log_z(const TabularMdp& mdp, const TaskFamily& tasks, int k) {
  double total = 0.0;
  for (const auto& wt : enumerate_dynamics_support(mdp)) {
    const double r = trajectory_return(tasks, k, wt.trajectory);
    if (r > tasks.threshold()) total += wt.probability * std::exp(r);
  }
  return std::log(total);
}

}  // namespace

TEST(SoftValueIteration, ZeroRewardsOneStep) {
  const auto mdp = single_state(2, 1);
  const auto tasks = make_discrete_family(mdp, {{{0.0, 0.0}}});
  const auto sol = soft_value_iteration(mdp, tasks);
  EXPECT_EQ(sol.q(0, 0, 0, 0), 0.0);
  EXPECT_EQ(sol.q(0, 0, 0, 1), 0.0);
  EXPECT_NEAR(sol.v(0, 0, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(sol.log_z[0], 0.693147, 1e-6);
  EXPECT_EQ(sol.v(0, 1, 0), 0.0);
}

TEST(SoftValueIteration, RewardOneZero) {
  const auto mdp = single_state(2, 1);
  const auto tasks = make_discrete_family(mdp, {{{1.0, 0.0}}});
  EXPECT_NEAR(soft_value_iteration(mdp, tasks).log_z[0], 1.313262, 1e-6);
}

TEST(SoftValueIteration, MatchesEnumerationOnDeterministicMdps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSizes sizes{4, 3, 3, true};
    sizes.initial = InitialKind::kUniform;
    const auto mdp = make_random_mdp(seed, sizes);
    const auto tasks = make_random_tasks(mdp, 3, seed);
    const auto sol = soft_value_iteration(mdp, tasks);
    const auto exact = exact_log_partition(mdp, tasks);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(sol.log_z[k], enumerated_log_z(mdp, tasks, k), 1e-9);
      EXPECT_NEAR(exact[k], enumerated_log_z(mdp, tasks, k), 1e-9);
    }
  }
}

TEST(ExactLogPartition, MatchesEnumerationOnStochasticMdps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = make_random_mdp(seed, {3, 2, 3});
    const auto tasks = make_random_tasks(mdp, 2, seed);
    const auto exact = exact_log_partition(mdp, tasks);
    const auto sol = soft_value_iteration(mdp, tasks);
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(exact[k], enumerated_log_z(mdp, tasks, k), 1e-9);
      // Jensen: the expectation backup never exceeds the true normalizer.
      EXPECT_LE(sol.log_z[k], exact[k] + 1e-12);
    }
  }
}

TEST(SoftValueIteration, GoalFamilyExcludesUnreachableGoals) {
  const auto world = make_open_grid(1, 4, 2);
  const auto tasks = make_goal_family(world.mdp);
  const auto sol = soft_value_iteration(world.mdp, tasks);
  // Two steps allow a single move from state 0.
  EXPECT_GT(sol.log_z[1], tasks.threshold());
  EXPECT_LE(sol.log_z[2], tasks.threshold());
}

TEST(SoftValueIteration, ParallelMatchesSerialBitForBit) {
  const auto world = make_four_rooms(1, 0.1, 8);
  const auto tasks = make_goal_family(world.mdp);
  const auto a = soft_value_iteration(world.mdp, tasks, Execution::kSerial);
  const auto b = soft_value_iteration(world.mdp, tasks, Execution::kParallel);
  EXPECT_EQ(a.soft_q, b.soft_q);
  EXPECT_EQ(a.soft_v, b.soft_v);
  EXPECT_EQ(a.log_z, b.log_z);
}

TEST(SoftValueIterationProperty, ConstantShiftMovesLogZByTc) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = make_random_mdp(seed, {3, 2, 3});
    const auto tasks = make_random_tasks(mdp, 2, seed);
    const double c = 1.75;
    const auto shifted = tasks.with_bias(1, c);
    const auto a = soft_value_iteration(mdp, tasks);
    const auto b = soft_value_iteration(mdp, shifted);
    EXPECT_NEAR(b.log_z[1] - a.log_z[1], 3 * c, 1e-9);
    EXPECT_NEAR(b.log_z[0], a.log_z[0], 1e-15);
    const auto pa = soft_optimal_policy(a).policy.table();
    const auto pb = soft_optimal_policy(b).policy.table();
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-9);
  }
}

TEST(SoftOptimalPolicy, EqualQGivesUniformRow) {
  const auto mdp = single_state(3, 1);
  const auto tasks = make_discrete_family(mdp, {{{0.4, 0.4, 0.4}}});
  const auto pi = soft_optimal_policy(soft_value_iteration(mdp, tasks)).policy;
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(pi.prob(0, 0, 0, a), 1.0 / 3.0, 1e-15);
}

TEST(SoftOptimalPolicy, SoftmaxOfOneZero) {
  const auto mdp = single_state(2, 1);
  const auto tasks = make_discrete_family(mdp, {{{1.0, 0.0}}});
  const auto pi = soft_optimal_policy(soft_value_iteration(mdp, tasks)).policy;
  EXPECT_NEAR(pi.prob(0, 0, 0, 0), 0.731059, 1e-6);
  EXPECT_NEAR(pi.prob(0, 0, 0, 1), 0.268941, 1e-6);
}

TEST(SoftOptimalPolicy, AllSentinelRowFallsBackToUniform) {
  const auto world = make_open_grid(1, 3, 1);
  const auto tasks = make_goal_family(world.mdp);
  const auto result = soft_optimal_policy(soft_value_iteration(world.mdp, tasks));
  EXPECT_GT(result.fallback_rows, 0u);
  // From state 0 at the last step only goal 0 is reachable; goal 2's row is uniform.
  for (int a = 0; a < kGridActions; ++a) EXPECT_NEAR(result.policy.prob(2, 0, 0, a), 0.2, 1e-15);
  result.policy.check();
}

TEST(EntropyObjective, UniformPolicyZeroRewardsIsPureEntropy) {
  const auto mdp = single_state(2, 2);
  const auto tasks = make_discrete_family(mdp, {{{0.0, 0.0}}});
  EXPECT_NEAR(entropy_regularized_objective(mdp, tasks, TabularPolicy::uniform(1, 1, 1, 2)), 1.386294, 1e-6);
}

TEST(EntropyObjectiveProperty, SoftOptimalPolicyAttainsLogZ) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSizes sizes{3, 3, 3};
    sizes.initial = InitialKind::kOneHot;
    const auto mdp = make_random_mdp(seed, sizes);
    const auto tasks = make_random_tasks(mdp, 3, seed);
    const auto sol = soft_value_iteration(mdp, tasks);
    const auto pi = soft_optimal_policy(sol).policy;
    double expected = 0.0;
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(entropy_regularized_return(mdp, tasks, pi, k), sol.log_z[k], 1e-9);
      expected += tasks.prior(k) * sol.log_z[k];
    }
    EXPECT_NEAR(entropy_regularized_objective(mdp, tasks, pi), expected, 1e-9);
  }
}

TEST(EntropyObjectiveProperty, PerturbedPolicyIsStrictlyWorse) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSizes sizes{3, 2, 2};
    sizes.initial = InitialKind::kOneHot;
    const auto mdp = make_random_mdp(seed, sizes);
    const auto tasks = make_random_tasks(mdp, 2, seed);
    const auto sol = soft_value_iteration(mdp, tasks);
    auto pi = soft_optimal_policy(sol).policy;
    const double best = entropy_regularized_objective(mdp, tasks, pi);
    Rng rng(seed);
    for (int k = 0; k < 2; ++k)
      for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 3; ++s) {
          double* row = pi.mutable_row(k, t, s);
          const double delta = 0.2 * std::min(row[0], row[1]) * (rng.uniform() + 0.1);
          row[0] -= delta;
          row[1] += delta;
        }
    EXPECT_LT(entropy_regularized_objective(mdp, tasks, pi), best - 1e-12) << "seed " << seed;
  }
}

TEST(JointKl, TargetAgainstItselfIsZero) {
  const auto mdp = make_random_mdp(1, {3, 2, 2, false, 1.0, InitialKind::kOneHot});
  const auto tasks = make_random_tasks(mdp, 2, 1);
  const auto sol = soft_value_iteration(mdp, tasks);
  const auto p = target_joint(mdp, tasks, sol.log_z);
  EXPECT_NEAR(joint_kl(mdp, tasks, sol.log_z, p).value, 0.0, 1e-12);
}

TEST(JointKl, SoftOptimalPolicyWithPriorLabelsIsZero) {
  const auto mdp = make_random_mdp(2, {3, 2, 3, false, 1.0, InitialKind::kOneHot});
  const auto tasks = make_random_tasks(mdp, 3, 2);
  const auto pi = soft_optimal_policy(soft_value_iteration(mdp, tasks)).policy;
  EXPECT_NEAR(joint_kl(mdp, tasks, pi, commanded_labeler(3)).value, 0.0, 1e-9);
}

TEST(JointKl, UniformPolicyEqualsLogZMinusObjective) {
  const auto mdp = single_state(2, 1);
  const auto tasks = make_discrete_family(mdp, {{{1.0, 0.0}}});
  const auto pi = TabularPolicy::uniform(1, 1, 1, 2);
  const double kl = joint_kl(mdp, tasks, pi, commanded_labeler(1)).value;
  const double expected = std::log(std::exp(1.0) + 1.0) - entropy_regularized_objective(mdp, tasks, pi);
  EXPECT_NEAR(kl, expected, 1e-12);
  // By hand: 0.5*(ln 0.5 - (1 - ln(e+1))) + 0.5*(ln 0.5 - (0 - ln(e+1)))
  EXPECT_NEAR(kl, std::log(0.5) - 0.5 + std::log(std::exp(1.0) + 1.0), 1e-12);
}

TEST(JointKl, SupportViolationReportsTrajectory) {
  const auto world = make_open_grid(1, 3, 1);
  const auto tasks = make_goal_family(world.mdp, std::vector<int>{0, 1});
  const auto pi = TabularPolicy::uniform(1, 1, 3, kGridActions);
  // Commanded labels keep goal 1 on trajectories that never reach it.
  const auto result = joint_kl(world.mdp, tasks, pi, commanded_labeler(2));
  EXPECT_TRUE(result.support_violation);
  EXPECT_TRUE(std::isinf(result.value));
  ASSERT_TRUE(result.offending.has_value());
  EXPECT_NE(result.offending->final_state(), tasks.goal_states()[result.offending_task]);
}

TEST(JointKlProperty, NonNegativeForRandomPolicies) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomMdpSizes sizes{3, 2, 2};
    sizes.initial = InitialKind::kOneHot;
    const auto mdp = make_random_mdp(seed, sizes);
    const auto tasks = make_random_tasks(mdp, 2, seed);
    const auto pi = random_policy(2, 2, 3, 2, seed + 1000);
    EXPECT_GE(joint_kl(mdp, tasks, pi, commanded_labeler(2)).value, -1e-12) << "seed " << seed;
  }
}

TEST(CategoricalKl, Basics) {
  const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75}, z = {1.0, 0.0};
  EXPECT_NEAR(categorical_kl(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
  EXPECT_TRUE(std::isinf(categorical_kl(p, z)));
  EXPECT_EQ(categorical_kl(z, p), std::log(2.0));
}
