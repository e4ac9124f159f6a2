#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "hipi/enumeration.hpp"
#include "hipi/envs.hpp"
#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"

using namespace hipi;
using namespace hipi::testing;

namespace {

double chi_square_critical(int df) {
  const boost::math::chi_squared dist(df);
  return boost::math::quantile(boost::math::complement(dist, 0.001));
}

double chi_square_stat(const std::vector<double>& counts, const std::vector<double>& probs, double n) {
  double stat = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] == 0.0) {
      EXPECT_EQ(counts[k], 0.0);
      continue;
    }
    const double e = n * probs[k];
    stat += (counts[k] - e) * (counts[k] - e) / e;
  }
  return stat;
}

// One state, two actions, T=1. Action 0 earns (10, 1) and action 1 earns (9, 2)
// under tasks (0, 1).
struct ScaledPair {
  TabularMdp mdp = single_state(2, 1);
  TaskFamily tasks = make_discrete_family(mdp, {{{10.0, 9.0}}, {{1.0, 2.0}}});
  Trajectory first{{{0, 0}}, 0};
  Trajectory second{{{0, 1}}, 1};
};

}  // namespace

TEST(TrajectoryPosterior, EqualRewardsGivePrior) {
  const auto mdp = single_state(2, 2);
  const auto tasks = make_discrete_family(mdp, {{{0.3, -0.1}}, {{0.3, -0.1}}, {{0.3, -0.1}}},
                                          std::vector<double>{0.2, 0.5, 0.3});
  const std::vector<double> log_z = {0.7, 0.7, 0.7};
  const auto post = trajectory_posterior({{{0, 0}, {0, 1}}, {}}, tasks, log_z);
  EXPECT_FALSE(post.fallback);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(post.probs[k], tasks.prior(k), 1e-15);
}

TEST(TrajectoryPosterior, GoalFamilyDeltaAtReachedState) {
  const auto world = make_open_grid(1, 8, 8);
  const auto tasks = make_goal_family(world.mdp);
  const auto sol = soft_value_iteration(world.mdp, tasks);
  Trajectory traj;
  for (int s = 0; s < 7; ++s) traj.steps.push_back({s, kRight});
  traj.steps.push_back({7, kStay});
  const auto post = trajectory_posterior(traj, tasks, sol.log_z);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(post.probs[k], k == 7 ? 1.0 : 0.0);
}

TEST(TrajectoryPosterior, ScaledReturnsHandSoftmax) {
  const auto mdp = single_state(2, 1);
  const auto tasks = make_discrete_family(mdp, {{{10.0, 0.0}}, {{1.0, 0.0}}});
  const std::vector<double> log_z = {9.620, 1.620};
  const auto post = trajectory_posterior({{{0, 0}}, {}}, tasks, log_z);
  EXPECT_NEAR(post.probs[0], 0.731059, 1e-6);
  EXPECT_NEAR(post.probs[1], 0.268941, 1e-6);
}

TEST(TrajectoryPosterior, AllExcludedFallsBackToPrior) {
  const auto world = make_open_grid(1, 3, 1);
  const auto tasks = make_goal_family(world.mdp, std::vector<int>{1, 2});
  const auto sol = soft_value_iteration(world.mdp, tasks);
  const auto post = trajectory_posterior({{{0, kStay}}, {}}, tasks, sol.log_z);
  EXPECT_TRUE(post.fallback);
  EXPECT_DOUBLE_EQ(post.probs[0], 0.5);
}

TEST(TrajectoryPosterior, WrongLogZSizeThrows) {
  ScaledPair f;
  const std::vector<double> log_z = {0.0};
  EXPECT_THROW(trajectory_posterior(f.first, f.tasks, log_z), InvalidInput);
}

TEST(TrajectoryPosteriorProperty, ConstantShiftLeavesPosteriorUnchanged) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = make_random_mdp(seed, {3, 2, 3});
    const auto tasks = make_random_tasks(mdp, 3, seed);
    const auto shifted = tasks.with_bias(seed % 3, 4.5);
    const auto z = exact_log_partition(mdp, tasks);
    const auto zs = exact_log_partition(mdp, shifted);
    EXPECT_NEAR(zs[seed % 3] - z[seed % 3], 3 * 4.5, 1e-9);
    for (const auto& wt : enumerate_dynamics_support(mdp)) {
      for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(trajectory_return(shifted, k, wt.trajectory) - trajectory_return(tasks, k, wt.trajectory),
                    k == static_cast<int>(seed % 3) ? 13.5 : 0.0, 1e-12);
      const auto a = trajectory_posterior(wt.trajectory, tasks, z);
      const auto b = trajectory_posterior(wt.trajectory, shifted, zs);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-9);
    }
  }
}

TEST(TrajectoryPosteriorProperty, EqualRewardsAcrossTasksGivePrior) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = make_random_mdp(seed, {3, 2, 2});
    const auto one = make_random_tasks(mdp, 1, seed);
    StationaryReward table(3, std::vector<double>(2));
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) table[s][a] = one.reward(0, 0, s, a);
    const auto tasks = make_discrete_family(mdp, {table, table, table}, std::vector<double>{0.1, 0.3, 0.6});
    const auto z = exact_log_partition(mdp, tasks);
    for (const auto& wt : enumerate_dynamics_support(mdp)) {
      const auto post = trajectory_posterior(wt.trajectory, tasks, z);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(post.probs[k], tasks.prior(k), 1e-12);
    }
  }
}

TEST(TrajectoryPosteriorProperty, HerEquivalenceOnRandomMdps) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomMdpSizes sizes{4, 2, 3};
    sizes.initial = InitialKind::kUniform;
    const auto mdp = make_random_mdp(seed, sizes);
    const auto tasks = make_goal_family(mdp);
    // Stochastic dynamics: the expectation backup sends every goal to the sentinel,
    // so the exact normalizer is the meaningful one here.
    const auto z = exact_log_partition(mdp, tasks);
    for (const auto& wt : enumerate_dynamics_support(mdp)) {
      const auto post = trajectory_posterior(wt.trajectory, tasks, z);
      for (int k = 0; k < 4; ++k) EXPECT_EQ(post.probs[k], k == wt.trajectory.final_state() ? 1.0 : 0.0);
    }
  }
}

TEST(TransitionPosterior, SingleTaskIsDelta) {
  const auto mdp = make_random_mdp(0, {3, 2, 2});
  const auto tasks = make_random_tasks(mdp, 1, 0);
  const auto sol = soft_value_iteration(mdp, tasks);
  const auto post = transition_posterior({1, 1, 0, 0, 1}, sol, tasks);
  ASSERT_EQ(post.probs.size(), 1u);
  EXPECT_EQ(post.probs[0], 1.0);
}

TEST(TransitionPosterior, IdenticalTasksSplitEvenly) {
  const auto mdp = single_state(2, 2);
  const auto tasks = make_discrete_family(mdp, {{{0.2, 0.9}}, {{0.2, 0.9}}});
  const auto sol = soft_value_iteration(mdp, tasks);
  const auto post = transition_posterior({0, 1, 0, 0, 0}, sol, tasks);
  EXPECT_NEAR(post.probs[0], 0.5, 1e-15);
  EXPECT_NEAR(post.probs[1], 0.5, 1e-15);
}

TEST(TransitionPosterior, RejectsBadTimeStep) {
  const auto mdp = single_state(2, 2);
  const auto tasks = make_discrete_family(mdp, {{{0.2, 0.9}}});
  const auto sol = soft_value_iteration(mdp, tasks);
  EXPECT_THROW(transition_posterior({0, 1, 0, 0, 2}, sol, tasks), InvalidInput);
}

TEST(TransitionPosterior, LastStepMatchesTrajectoryPosteriorForOneStepMdp) {
  // With T=1 the soft Q is the reward, so both posteriors coincide.
  ScaledPair f;
  const auto sol = soft_value_iteration(f.mdp, f.tasks);
  for (int a = 0; a < 2; ++a) {
    const auto tp = transition_posterior({0, a, 0, 0, 0}, sol, f.tasks);
    const auto jp = trajectory_posterior({{{0, a}}, {}}, f.tasks, sol.log_z);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(tp.probs[k], jp.probs[k], 1e-15);
  }
}

TEST(BatchRelabelMc, SingleItemIsUniformOverBatchTasks) {
  ScaledPair f;
  const std::vector<BatchItem> batch = {Trajectory{{{0, 0}}, {}}};
  const auto out = batch_relabel_mc(batch, f.tasks, {}, 1);
  EXPECT_EQ(out.columns, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(out.estimator_log_z[0], 10.0);
  EXPECT_DOUBLE_EQ(out.estimator_log_z[1], 1.0);
  EXPECT_NEAR(out.items[0].posterior.probs[0], 0.5, 1e-15);
}

TEST(BatchRelabelMc, ScaledPairIsSeparatedOnlyByNormalization) {
  ScaledPair f;
  const std::vector<BatchItem> batch = {f.first, f.second};
  const auto out = batch_relabel_mc(batch, f.tasks, {}, 3);
  EXPECT_NEAR(out.estimator_log_z[0], 9.620, 5e-4);
  EXPECT_NEAR(out.estimator_log_z[1], 1.620, 5e-4);
  EXPECT_GT(out.items[0].posterior.probs[0], out.items[0].posterior.probs[1]);
  EXPECT_GT(out.items[1].posterior.probs[1], out.items[1].posterior.probs[0]);

  McRelabelOptions raw;
  raw.log_z_override = std::vector<double>{0.0, 0.0};
  const auto unnormalized = batch_relabel_mc(batch, f.tasks, raw, 3);
  for (const auto& item : unnormalized.items) EXPECT_GT(item.posterior.probs[0], item.posterior.probs[1]);
}

TEST(BatchRelabelMc, SentinelColumnExcluded) {
  const auto world = make_open_grid(1, 3, 1);
  const auto tasks = make_goal_family(world.mdp);
  const std::vector<BatchItem> batch = {Trajectory{{{0, kStay}}, 0}, Trajectory{{{0, kRight}}, 2}};
  const auto out = batch_relabel_mc(batch, tasks, {}, 0);
  EXPECT_EQ(out.excluded_tasks, std::vector<int>{2});
  for (const auto& item : out.items) {
    EXPECT_EQ(item.sampled_task, 0);
    EXPECT_EQ(item.posterior.probs[2], 0.0);
  }
}

TEST(BatchRelabelMc, EmptyBatchAndModeMismatchThrow) {
  ScaledPair f;
  EXPECT_THROW(batch_relabel_mc({}, f.tasks, {}, 0), InvalidInput);
  const std::vector<BatchItem> transitions = {Transition{0, 0, 0, 0, 0}};
  EXPECT_THROW(batch_relabel_mc(transitions, f.tasks, {}, 0), InvalidInput);
}

TEST(BatchRelabelMc, SoftQModeUsesTransitionScores) {
  ScaledPair f;
  const auto sol = soft_value_iteration(f.mdp, f.tasks);
  McRelabelOptions options;
  options.mode = ScoreMode::kSoftQ;
  options.soft_q = sol.view();
  const std::vector<BatchItem> batch = {Transition{0, 0, 0, 0, 0}, Transition{0, 1, 0, 1, 0}};
  const auto out = batch_relabel_mc(batch, f.tasks, options, 3);
  EXPECT_NEAR(out.estimator_log_z[0], std::log((std::exp(10.0) + std::exp(9.0)) / 2), 1e-12);
}

TEST(BatchRelabelMcProperty, ExactLogZFrequenciesMatchPosterior) {
  const auto mdp = make_random_mdp(5, {3, 2, 2});
  const auto tasks = make_random_tasks(mdp, 3, 5, -1.0, 1.0);
  const auto z = exact_log_partition(mdp, tasks);
  const Trajectory traj{{{0, 1}, {2, 0}}, {}};
  const auto expected = trajectory_posterior(traj, tasks, z).probs;
  McRelabelOptions options;
  options.weight_by_prior = true;
  options.log_z_override = z;
  const std::vector<BatchItem> batch = {traj};
  const int n = 10000;
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < n; ++i) counts[batch_relabel_mc(batch, tasks, options, mix_seed(77, i)).items[0].sampled_task]++;
  EXPECT_LT(chi_square_stat(counts, expected, n), chi_square_critical(2));
}

TEST(BatchRelabelMcProperty, EstimateApproachesExactLogZ) {
  // Uniform actions on a deterministic MDP sample trajectories in proportion to the
  // dynamics, so the in-batch mean of exp(R) estimates Z / |A|^T.
  RandomMdpSizes sizes{3, 2, 3, true};
  sizes.initial = InitialKind::kUniform;
  const auto mdp = make_random_mdp(11, sizes);
  const auto tasks = make_random_tasks(mdp, 2, 11);
  const auto z = exact_log_partition(mdp, tasks);
  const auto pi = TabularPolicy::uniform(1, 1, 3, 2);
  std::vector<double> errors;
  for (int B : {10, 100, 1000, 10000}) {
    double err = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Rng rng(mix_seed(B, rep));
      std::vector<BatchItem> batch;
      for (int i = 0; i < B; ++i) {
        Trajectory traj;
        int s = static_cast<int>(rng.categorical(mdp.initial_table()));
        for (int t = 0; t < 3; ++t) {
          const int a = static_cast<int>(rng.uniform_index(2));
          traj.steps.push_back({s, a});
          for (int n = 0; n < 3; ++n)
            if (mdp.p(s, a, n) == 1.0) {
              s = n;
              break;
            }
        }
        batch.push_back(traj);
      }
      const auto out = batch_relabel_mc(batch, tasks, {}, 0);
      for (int k = 0; k < 2; ++k) err += std::abs(out.estimator_log_z[k] - (z[k] - 3 * std::log(2.0)));
    }
    errors.push_back(err / 10);
  }
  EXPECT_LT(errors.back(), errors.front());
  EXPECT_LT(errors.back(), 0.05);
}

TEST(NormalizeScores, LiteralMeanExpAblation) {
  const std::vector<std::vector<double>> scores = {{0.0}, {std::log(3.0)}};
  const auto log_mean = normalize_scores(scores, {}, kDefaultSentinel);
  EXPECT_NEAR(log_mean.log_z[0], std::log(2.0), 1e-15);
  const auto literal = normalize_scores(scores, {}, kDefaultSentinel, true);
  EXPECT_NEAR(literal.log_z[0], 2.0, 1e-15);
}

TEST(RelabelFinalState, ReturnsReachedGoal) {
  const auto world = make_open_grid(1, 5, 4);
  const auto tasks = make_goal_family(world.mdp);
  const Trajectory traj{{{0, kRight}, {1, kRight}, {2, kRight}, {3, kStay}}, {}};
  EXPECT_EQ(relabel_final_state(traj, tasks), 3);
}

TEST(RelabelFinalState, OneStepTrajectoryUsesItsOnlyState) {
  const auto world = make_open_grid(1, 5, 1);
  const auto tasks = make_goal_family(world.mdp);
  EXPECT_EQ(relabel_final_state({{{2, kRight}}, {}}, tasks), 2);
}

TEST(RelabelFinalState, NonGoalFamilyUnsupported) {
  ScaledPair f;
  EXPECT_THROW(relabel_final_state(f.first, f.tasks), UnsupportedStrategy);
  EXPECT_THROW(relabel_future_state(f.first, 0, 1, f.tasks, 0u), UnsupportedStrategy);
}

TEST(RelabelFutureState, WindowOneIsNextState) {
  const auto world = make_open_grid(1, 6, 5);
  const auto tasks = make_goal_family(world.mdp);
  const Trajectory traj{{{0, kRight}, {1, kRight}, {2, kRight}, {3, kRight}, {4, kRight}}, {}};
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (int t = 0; t < 4; ++t) EXPECT_EQ(relabel_future_state(traj, t, 1, tasks, seed), t + 1);
}

TEST(RelabelFutureState, TruncatedWindowSamplesRemainingStates) {
  const auto world = make_open_grid(1, 6, 5);
  const auto tasks = make_goal_family(world.mdp);
  const Trajectory traj{{{0, kRight}, {1, kRight}, {2, kRight}, {3, kRight}, {4, kRight}}, {}};
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) seen.insert(*relabel_future_state(traj, 2, 4, tasks, seed));
  EXPECT_EQ(seen, (std::set<int>{3, 4}));
  EXPECT_EQ(relabel_future_state(traj, 4, 4, tasks, 0u), 4);
}

TEST(RelabelRandom, UniformFourTasks) {
  const auto mdp = single_state(1, 1);
  const auto tasks = make_discrete_family(mdp, {{{0.0}}, {{0.0}}, {{0.0}}, {{0.0}}});
  Rng rng(5);
  std::vector<double> counts(4, 0.0);
  for (int i = 0; i < 10000; ++i) counts[relabel_random(tasks, rng)]++;
  for (double c : counts) EXPECT_NEAR(c / 10000, 0.25, 0.02);
  EXPECT_LT(chi_square_stat(counts, {0.25, 0.25, 0.25, 0.25}, 10000), chi_square_critical(3));
}

TEST(RelabelRandom, DegeneratePriorAlwaysTaskZero) {
  const auto mdp = single_state(1, 1);
  const auto tasks = make_discrete_family(mdp, {{{0.0}}, {{0.0}}}, std::vector<double>{1.0, 0.0});
  for (std::uint64_t seed = 0; seed < 500; ++seed) EXPECT_EQ(relabel_random(tasks, seed), 0);
}

TEST(RelabelRandom, SkewedPriorChiSquare) {
  const auto mdp = single_state(1, 1);
  const std::vector<double> prior = {0.7, 0.2, 0.1};
  const auto tasks = make_discrete_family(mdp, {{{0.0}}, {{0.0}}, {{0.0}}}, prior);
  Rng rng(17);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 10000; ++i) counts[relabel_random(tasks, rng)]++;
  EXPECT_LT(chi_square_stat(counts, prior, 10000), 13.816);
}

TEST(StrategyNames, RoundTripAndUnknown) {
  for (auto s : {Strategy::kIrlExact, Strategy::kIrlLearned, Strategy::kIrlBatch, Strategy::kFinalState,
                 Strategy::kFutureState, Strategy::kRandom, Strategy::kNone})
    EXPECT_EQ(strategy_from_string(to_string(s)), s);
  EXPECT_THROW(strategy_from_string("hindsight"), UnsupportedStrategy);
}
