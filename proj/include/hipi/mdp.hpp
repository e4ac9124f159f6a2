#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hipi {

/// Finite-horizon MDP with explicit probability tables.
///
/// Time steps are 0-based throughout the library: a trajectory visits steps
/// t = 0 .. horizon-1 and takes one action at each of them.
class TabularMdp {
 public:
  /// Throws InvalidInput listing every violated invariant.
  TabularMdp(int num_states, int num_actions, int horizon, std::vector<double> transition,
             std::vector<double> initial);

  /// Every invariant violation with row/column indices; empty when valid.
  static std::vector<std::string> violations(int num_states, int num_actions, int horizon,
                                             const std::vector<double>& transition,
                                             const std::vector<double>& initial);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }

  double p(int s, int a, int next) const {
    return transition_[(static_cast<std::size_t>(s) * num_actions_ + a) * num_states_ + next];
  }
  double initial(int s) const { return initial_[s]; }

  const std::vector<double>& transition_table() const { return transition_; }
  const std::vector<double>& initial_table() const { return initial_; }

  bool deterministic() const;

  /// Same dynamics with a different horizon.
  TabularMdp with_horizon(int horizon) const;
  /// Same dynamics with a different initial distribution.
  TabularMdp with_initial(std::vector<double> initial) const;
  /// Same dynamics, starting from `state` with probability 1.
  TabularMdp starting_at(int state) const;

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> transition_;  // [s][a][s']
  std::vector<double> initial_;
};

struct Step {
  int state = 0;
  int action = 0;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::vector<Step> steps;
  std::optional<int> commanded_task;

  int final_state() const { return steps.back().state; }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Transition {
  int state = 0;
  int action = 0;
  int next_state = 0;
  int commanded_task = 0;
  int time_step = 0;
};

/// Probabilities pi[task][t][s][a]. A table with num_tasks == 1 is task-agnostic and
/// serves every task; horizon == 1 means stationary.
class TabularPolicy {
 public:
  TabularPolicy(int num_tasks, int horizon, int num_states, int num_actions, std::vector<double> probs);

  static TabularPolicy uniform(int num_tasks, int horizon, int num_states, int num_actions);

  int num_tasks() const { return num_tasks_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double prob(int task, int t, int s, int a) const { return probs_[index(task, t, s, 0) + a]; }
  const double* row(int task, int t, int s) const { return probs_.data() + index(task, t, s, 0); }
  double* mutable_row(int task, int t, int s) { return probs_.data() + index(task, t, s, 0); }

  const std::vector<double>& table() const { return probs_; }

  /// Throws InvalidInput if a row is negative or does not sum to 1 within 1e-12.
  void check() const;

 private:
  std::size_t index(int task, int t, int s, int a) const {
    const int k = num_tasks_ == 1 ? 0 : task;
    const int tt = horizon_ == 1 ? 0 : t;
    return ((static_cast<std::size_t>(k) * horizon_ + tt) * num_states_ + s) * num_actions_ + a;
  }

  int num_tasks_;
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

/// Throws InvalidInput if the trajectory does not fit the MDP.
void check_trajectory(const TabularMdp& mdp, const Trajectory& traj);
void check_transition(const TabularMdp& mdp, const Transition& tr);

/// log p1(s_0) + sum_t log pi(a_t|s_t,task) + sum_{t<T-1} log P(s_{t+1}|s_t,a_t).
/// Returns -infinity when any factor is zero.
double trajectory_log_likelihood(const TabularMdp& mdp, const TabularPolicy& policy, int task,
                                 const Trajectory& traj);

/// Log-probability of the trajectory's states under the dynamics alone, with the
/// actions weighted by counting measure.
double dynamics_log_likelihood(const TabularMdp& mdp, const Trajectory& traj);

}  // namespace hipi
