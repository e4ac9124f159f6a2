#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/numerics.hpp"

namespace hipi {

enum class TaskKind { kGoal, kDiscrete, kLinear };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

/// phi[s][a] is a d-dimensional feature vector.
class FeatureTable {
 public:
  FeatureTable(int num_states, int num_actions, int dim, std::vector<double> values);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int dim() const { return dim_; }
  const double* at(int s, int a) const {
    return values_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * dim_;
  }
  const std::vector<double>& values() const { return values_; }

 private:
  int num_states_;
  int num_actions_;
  int dim_;
  std::vector<double> values_;
};

/// Reward table r[s][a] for one task, shared by every time step.
using StationaryReward = std::vector<std::vector<double>>;

/// Finite task set with prior weights and time-indexed reward tables r[task][t][s][a].
class TaskFamily {
 public:
  int num_tasks() const { return num_tasks_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  TaskKind kind() const { return kind_; }
  double sentinel() const { return sentinel_; }
  double threshold() const { return exclusion_threshold(sentinel_); }

  double prior(int task) const { return prior_[task]; }
  const std::vector<double>& prior_table() const { return prior_; }

  double reward(int task, int t, int s, int a) const { return rewards_[index(task, t, s, a)]; }
  const std::vector<double>& reward_table() const { return rewards_; }

  /// Goal families only: the state each task asks to reach.
  const std::vector<int>& goal_states() const { return goal_states_; }
  /// Task whose goal is `state`, if any.
  std::optional<int> task_for_goal(int state) const;

  /// Linear families only.
  const std::vector<std::vector<double>>& coefficients() const { return coefficients_; }
  const std::optional<FeatureTable>& features() const { return features_; }

  /// Copy of the family with `bias` added to every reward of `task`.
  TaskFamily with_bias(int task, double bias) const;
  /// Copy with a replaced prior (validated).
  TaskFamily with_prior(std::vector<double> prior) const;

  friend TaskFamily make_goal_family(const TabularMdp&, std::optional<std::vector<int>>, double);
  friend TaskFamily make_linear_family(const TabularMdp&, const FeatureTable&,
                                       const std::vector<std::vector<double>>&,
                                       std::optional<std::vector<double>>);
  friend TaskFamily make_discrete_family(const TabularMdp&, const std::vector<StationaryReward>&,
                                         std::optional<std::vector<double>>);
  friend TaskFamily make_discrete_family_timed(const TabularMdp&, int, std::vector<double>,
                                               std::optional<std::vector<double>>);

 private:
  TaskFamily() = default;
  std::size_t index(int task, int t, int s, int a) const {
    return ((static_cast<std::size_t>(task) * horizon_ + t) * num_states_ + s) * num_actions_ + a;
  }
  void set_prior(std::optional<std::vector<double>> prior);

  TaskKind kind_ = TaskKind::kDiscrete;
  int num_tasks_ = 0;
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  double sentinel_ = kDefaultSentinel;
  std::vector<double> prior_;
  std::vector<double> rewards_;
  std::vector<int> goal_states_;
  std::vector<std::vector<double>> coefficients_;
  std::optional<FeatureTable> features_;
};

/// One task per goal state: reward 0 everywhere except the sentinel at the last
/// step for states other than the goal. Goals default to every state; the prior is uniform.
TaskFamily make_goal_family(const TabularMdp& mdp, std::optional<std::vector<int>> goals = std::nullopt,
                            double sentinel = kDefaultSentinel);

/// r[task][t][s][a] = dot(coefficients[task], phi[s][a]).
TaskFamily make_linear_family(const TabularMdp& mdp, const FeatureTable& features,
                              const std::vector<std::vector<double>>& coefficient_sets,
                              std::optional<std::vector<double>> prior = std::nullopt);

/// Verbatim stationary reward tables, one per task.
TaskFamily make_discrete_family(const TabularMdp& mdp, const std::vector<StationaryReward>& reward_tables,
                                std::optional<std::vector<double>> prior = std::nullopt);

/// Verbatim time-indexed tables, flattened [task][t][s][a].
TaskFamily make_discrete_family_timed(const TabularMdp& mdp, int num_tasks, std::vector<double> rewards,
                                      std::optional<std::vector<double>> prior = std::nullopt);

/// Sum of per-step rewards of `task` along the trajectory, clamped at the sentinel.
double trajectory_return(const TaskFamily& tasks, int task, const Trajectory& traj);

/// Same sum restricted to steps t >= from_step.
double partial_return(const TaskFamily& tasks, int task, const Trajectory& traj, int from_step);

}  // namespace hipi
