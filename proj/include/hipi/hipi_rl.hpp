#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

struct HipiRlConfig {
  double learning_rate = 0.1;
  double relabel_fraction = 0.5;
  int batch_size = 32;
  int updates_per_env_step = 1;
  std::size_t buffer_capacity = 100000;
  /// Updates between recomputations of log Z from the learned Q (strategy irl).
  int logz_refresh_interval = 100;
  /// Look-ahead for future_state relabeling.
  int future_window = 4;
  double discount = 1.0;
  /// Starting value of every Q entry. Use the sentinel to treat unvisited actions as
  /// unsupported (offline data).
  double initial_q = 0.0;
  long total_env_steps = 0;
  /// Updates run on the initial dataset when no environment steps are taken.
  long offline_updates = 0;
  /// Environment steps between evaluations.
  long eval_period = 1000;
  std::uint64_t seed = 0;
};

/// FIFO transition store. Each entry keeps the state sequence of its episode so that
/// hindsight strategies can look at later states.
class ReplayBuffer {
 public:
  struct Entry {
    Transition transition;
    std::shared_ptr<const std::vector<int>> episode_states;
  };

  /// Throws InvalidInput for a zero capacity.
  explicit ReplayBuffer(std::size_t capacity);

  void add(Entry entry);
  /// Adds every step of `traj` under its commanded task; the last step's successor
  /// is `final_next_state`, or the last state itself when not given.
  void add_episode(const Trajectory& traj, std::optional<int> final_next_state = std::nullopt);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Entry& at(std::size_t i) const { return entries_[i]; }
  const Entry& sample(Rng& rng) const { return entries_[rng.uniform_index(entries_.size())]; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

/// Learned soft Q table plus counters.
struct LearnerState {
  int num_tasks = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  double sentinel = kDefaultSentinel;
  std::vector<double> q;  // [k][t][s][a]
  long step_count = 0;
  long update_count = 0;
  HipiRlConfig config;

  SoftQView view() const { return {q, num_tasks, horizon, num_states, num_actions}; }
  double& at(int k, int t, int s, int a) {
    return q[((static_cast<std::size_t>(k) * horizon + t) * num_states + s) * num_actions + a];
  }
  /// Sentinel-aware log-sum-exp of the row; 0 past the horizon.
  double soft_value(int k, int t, int s) const;
};

LearnerState make_learner(const TabularMdp& mdp, const TaskFamily& tasks, const HipiRlConfig& config);

/// Q[k][t][s][a] <- (1-eta) Q + eta (r_k(t,s,a) + gamma V[k][t+1][s']) for each transition,
/// with k its (possibly relabeled) commanded task. An entry at or below the exclusion
/// threshold carries no estimate and is overwritten by its target. `step_sizes`, when
/// given, replaces the configured learning rate per transition.
void soft_q_update(LearnerState& state, std::span<const Transition> batch, const TabularMdp& mdp,
                   const TaskFamily& tasks, std::span<const double> step_sizes = {});

/// Applies the labels sampled in `relabeled` to the transitions in `items` and updates.
void soft_q_update(LearnerState& state, std::span<const BatchItem> items, const RelabeledBatch& relabeled,
                   const TabularMdp& mdp, const TaskFamily& tasks);

/// log sum_s p1(s) exp(V[k][0][s]) from the learned table, per task.
std::vector<double> learned_log_partition(const LearnerState& state, const TabularMdp& mdp);

struct CurveRecord {
  long env_step = 0;
  int task = 0;
  double avg_return = 0.0;
  double success_rate = 0.0;
};

struct HipiRlResult {
  std::vector<CurveRecord> curve;
  LearnerState learner;
  /// How often each task was assigned to a relabeled item.
  std::vector<long> relabel_counts;
};

/// Soft Q-learning with a replay buffer whose minibatches are partially relabeled.
/// `dataset` pre-fills the buffer; with total_env_steps == 0 the run is purely
/// offline and performs config.offline_updates updates.
HipiRlResult run_hipi_rl(const TabularMdp& mdp, const TaskFamily& tasks, Strategy strategy,
                         const HipiRlConfig& config, std::span<const Trajectory> dataset = {});

/// Greedy-policy evaluation of a learned table: one record per task.
std::vector<CurveRecord> evaluate_greedy(const LearnerState& state, const TabularMdp& mdp, const TaskFamily& tasks,
                                         long env_step);

}  // namespace hipi
