#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hipi/joint.hpp"
#include "hipi/mdp.hpp"
#include "hipi/numerics.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

inline constexpr double kVerifyTolerance = 1e-9;

struct RelabelKlResult {
  double kl_before = 0.0;
  double kl_after = 0.0;
  bool pass = false;
};

struct RelabelBoundResult {
  double kl_before = 0.0;
  double kl_after = 0.0;
  double improvement = 0.0;
  /// E_{q(tau)} KL(q(psi|tau) || posterior(psi|tau)).
  double lower_bound = 0.0;
  /// improvement - lower_bound; zero up to rounding because both joints share the
  /// trajectory marginal.
  double residual = 0.0;
  bool pass = false;
};

/// q(tau, psi) from policy and labeler versus the same marginal relabeled with the
/// trajectory posterior, both measured against the target joint.
RelabelKlResult check_relabel_kl(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                          const Labeler& labeler, double cap = kDefaultEnumerationCap);

RelabelBoundResult check_relabel_bound(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                          const Labeler& labeler, double cap = kDefaultEnumerationCap);

struct OptimalityResult {
  double kl_posterior = 0.0;
  /// min over alternatives of kl(alternative) - kl(posterior).
  double min_margin = 0.0;
  bool pass = false;
};

/// Compares the posterior-relabeled joint against `alternatives` random labelers
/// applied to the same trajectory marginal.
OptimalityResult check_optimality(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                                  int alternatives, std::uint64_t seed, double cap = kDefaultEnumerationCap);

struct DualityResult {
  std::vector<double> log_z;
  std::vector<double> soft_optimal_return;
  double max_gap = 0.0;
  bool pass = false;
};

/// |logZ - entropy-regularized return of the soft-optimal policy| per task.
DualityResult check_duality(const TabularMdp& mdp, const TaskFamily& tasks, double cap = kDefaultEnumerationCap);

struct HerResult {
  std::size_t trajectories = 0;
  std::size_t exact_deltas = 0;
  bool pass = false;
};

/// Goal family over every state: is trajectory_posterior a delta at the final state
/// for every trajectory in the dynamics support?
HerResult check_her_equivalence(const TabularMdp& mdp, double cap = kDefaultEnumerationCap);

/// Random labeler: an independent Dirichlet(1) row per trajectory, or a uniformly
/// chosen one-hot row when `one_hot` is set. Deterministic in (seed, trajectory).
Labeler random_labeler(const TabularMdp& mdp, int num_tasks, std::uint64_t seed, bool one_hot = false);

/// Dirichlet(alpha) action rows for every (task, t, s).
TabularPolicy random_policy(int num_tasks, int horizon, int num_states, int num_actions, std::uint64_t seed,
                            double alpha = 1.0);

struct BiasDemoReport {
  double bias = 0.0;
  std::vector<std::vector<double>> returns;  // [trajectory][task]
  std::vector<double> log_z;                 // exact, per task
  std::vector<std::vector<double>> normalized_posterior;
  std::vector<int> unnormalized_assignment;  // argmax_psi R
  std::vector<int> normalized_assignment;    // argmax_psi R - logZ
};

/// Two trajectories, two tasks. Task 0 rewards (2 + bias, 1), task 1 rewards (1, 2)
/// for trajectories (0, 1).
BiasDemoReport bias_demo(double bias);

struct SweepConfig {
  int instances = 100;
  std::uint64_t seed = 0;
  int max_states = 4;
  int max_actions = 3;
  int max_horizon = 3;
  int max_tasks = 4;
  int alternatives = 20;
};

struct SweepInstance {
  std::uint64_t seed = 0;
  TabularMdp mdp;
  TaskFamily tasks;
  TabularPolicy policy;
  Labeler labeler;
};

/// Dirichlet(1) dynamics, one-hot start, uniform[-1,1] stationary rewards,
/// Dirichlet(1) prior, Dirichlet(1) policy rows, and a random labeler (one-hot on odd
/// indices).
SweepInstance make_sweep_instance(const SweepConfig& config, int index);

struct SweepRecord {
  int index = 0;
  std::uint64_t seed = 0;
  int num_states = 0, num_actions = 0, horizon = 0, num_tasks = 0;
  RelabelBoundResult relabel_check;  // carries the KLs of the improvement check too
  bool kl_pass = false;
  double duality_gap = 0.0;
  bool duality_pass = false;
  OptimalityResult optimality;
};

/// Every check on every instance. Instances are independent; the parallel path spreads
/// them over OpenMP threads and records are stored by index.
std::vector<SweepRecord> run_sweep(const SweepConfig& config, Execution exec = Execution::kParallel);

}  // namespace hipi
