#include "hipi/task_family.hpp"

#include <algorithm>
#include <cmath>

namespace hipi {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kGoal: return "goal";
    case TaskKind::kDiscrete: return "discrete";
    case TaskKind::kLinear: return "linear";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "goal") return TaskKind::kGoal;
  if (name == "discrete") return TaskKind::kDiscrete;
  if (name == "linear") return TaskKind::kLinear;
  throw InvalidInput("unknown task family kind '" + name + "'");
}

FeatureTable::FeatureTable(int num_states, int num_actions, int dim, std::vector<double> values)
    : num_states_(num_states), num_actions_(num_actions), dim_(dim), values_(std::move(values)) {
  if (num_states <= 0 || num_actions <= 0 || dim <= 0) throw InvalidInput("feature table dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(num_states) * num_actions * dim)
    throw InvalidInput("feature table has " + std::to_string(values_.size()) + " entries, expected " +
                       std::to_string(static_cast<std::size_t>(num_states) * num_actions * dim));
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("feature table contains a non-finite entry");
  }
}

std::optional<int> TaskFamily::task_for_goal(int state) const {
  const auto it = std::find(goal_states_.begin(), goal_states_.end(), state);
  if (it == goal_states_.end()) return std::nullopt;
  return static_cast<int>(it - goal_states_.begin());
}

void TaskFamily::set_prior(std::optional<std::vector<double>> prior) {
  if (!prior) {
    prior_.assign(num_tasks_, 1.0 / num_tasks_);
    return;
  }
  if (static_cast<int>(prior->size()) != num_tasks_)
    throw InvalidInput("prior has " + std::to_string(prior->size()) + " entries for " +
                       std::to_string(num_tasks_) + " tasks");
  double sum = 0.0;
  for (std::size_t i = 0; i < prior->size(); ++i) {
    const double p = (*prior)[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("prior[" + std::to_string(i) + "] is outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("prior does not sum to 1");
  prior_ = std::move(*prior);
}

TaskFamily TaskFamily::with_bias(int task, double bias) const {
  TaskFamily copy = *this;
  for (int t = 0; t < horizon_; ++t)
    for (int s = 0; s < num_states_; ++s)
      for (int a = 0; a < num_actions_; ++a) copy.rewards_[index(task, t, s, a)] += bias;
  return copy;
}

TaskFamily TaskFamily::with_prior(std::vector<double> prior) const {
  TaskFamily copy = *this;
  copy.set_prior(std::move(prior));
  return copy;
}

TaskFamily make_goal_family(const TabularMdp& mdp, std::optional<std::vector<int>> goals, double sentinel) {
  if (!(sentinel < 0.0)) throw InvalidInput("sentinel must be negative");
  TaskFamily f;
  f.kind_ = TaskKind::kGoal;
  f.horizon_ = mdp.horizon();
  f.num_states_ = mdp.num_states();
  f.num_actions_ = mdp.num_actions();
  f.sentinel_ = sentinel;
  if (goals) {
    if (goals->empty()) throw InvalidInput("goal list is empty");
    std::vector<bool> seen(mdp.num_states(), false);
    for (int g : *goals) {
      if (g < 0 || g >= mdp.num_states()) throw InvalidInput("goal state " + std::to_string(g) + " out of range");
      if (seen[g]) throw InvalidInput("goal state " + std::to_string(g) + " listed twice");
      seen[g] = true;
    }
    f.goal_states_ = *goals;
  } else {
    f.goal_states_.resize(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) f.goal_states_[s] = s;
  }
  f.num_tasks_ = static_cast<int>(f.goal_states_.size());
  f.rewards_.assign(static_cast<std::size_t>(f.num_tasks_) * f.horizon_ * f.num_states_ * f.num_actions_, 0.0);
  const int last = f.horizon_ - 1;
  for (int k = 0; k < f.num_tasks_; ++k) {
    for (int s = 0; s < f.num_states_; ++s) {
      if (s == f.goal_states_[k]) continue;
      for (int a = 0; a < f.num_actions_; ++a) f.rewards_[f.index(k, last, s, a)] = sentinel;
    }
  }
  f.set_prior(std::nullopt);
  return f;
}

TaskFamily make_linear_family(const TabularMdp& mdp, const FeatureTable& features,
                              const std::vector<std::vector<double>>& coefficient_sets,
                              std::optional<std::vector<double>> prior) {
  if (coefficient_sets.empty()) throw InvalidInput("linear family needs at least one coefficient set");
  if (features.num_states() != mdp.num_states() || features.num_actions() != mdp.num_actions())
    throw InvalidInput("feature table shape does not match the MDP");
  TaskFamily f;
  f.kind_ = TaskKind::kLinear;
  f.num_tasks_ = static_cast<int>(coefficient_sets.size());
  f.horizon_ = mdp.horizon();
  f.num_states_ = mdp.num_states();
  f.num_actions_ = mdp.num_actions();
  f.rewards_.resize(static_cast<std::size_t>(f.num_tasks_) * f.horizon_ * f.num_states_ * f.num_actions_);
  for (int k = 0; k < f.num_tasks_; ++k) {
    const auto& psi = coefficient_sets[k];
    if (static_cast<int>(psi.size()) != features.dim())
      throw InvalidInput("coefficient set " + std::to_string(k) + " has dimension " + std::to_string(psi.size()) +
                         ", features have dimension " + std::to_string(features.dim()));
    for (int s = 0; s < f.num_states_; ++s) {
      for (int a = 0; a < f.num_actions_; ++a) {
        const double* phi = features.at(s, a);
        double r = 0.0;
        for (int i = 0; i < features.dim(); ++i) r += psi[i] * phi[i];
        for (int t = 0; t < f.horizon_; ++t) f.rewards_[f.index(k, t, s, a)] = r;
      }
    }
  }
  f.coefficients_ = coefficient_sets;
  f.features_ = features;
  f.set_prior(std::move(prior));
  return f;
}

TaskFamily make_discrete_family(const TabularMdp& mdp, const std::vector<StationaryReward>& reward_tables,
                                std::optional<std::vector<double>> prior) {
  if (reward_tables.empty()) throw InvalidInput("discrete family needs at least one reward table");
  const int num_tasks = static_cast<int>(reward_tables.size());
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int T = mdp.horizon();
  std::vector<double> rewards(static_cast<std::size_t>(num_tasks) * T * S * A);
  for (int k = 0; k < num_tasks; ++k) {
    const auto& table = reward_tables[k];
    if (static_cast<int>(table.size()) != S)
      throw InvalidInput("reward table " + std::to_string(k) + " has " + std::to_string(table.size()) +
                         " rows, expected " + std::to_string(S));
    for (int s = 0; s < S; ++s) {
      if (static_cast<int>(table[s].size()) != A)
        throw InvalidInput("reward table " + std::to_string(k) + " row " + std::to_string(s) + " has " +
                           std::to_string(table[s].size()) + " columns, expected " + std::to_string(A));
      for (int a = 0; a < A; ++a) {
        for (int t = 0; t < T; ++t) rewards[((static_cast<std::size_t>(k) * T + t) * S + s) * A + a] = table[s][a];
      }
    }
  }
  return make_discrete_family_timed(mdp, num_tasks, std::move(rewards), std::move(prior));
}

TaskFamily make_discrete_family_timed(const TabularMdp& mdp, int num_tasks, std::vector<double> rewards,
                                      std::optional<std::vector<double>> prior) {
  if (num_tasks <= 0) throw InvalidInput("discrete family needs at least one task");
  TaskFamily f;
  f.kind_ = TaskKind::kDiscrete;
  f.num_tasks_ = num_tasks;
  f.horizon_ = mdp.horizon();
  f.num_states_ = mdp.num_states();
  f.num_actions_ = mdp.num_actions();
  const std::size_t expected = static_cast<std::size_t>(num_tasks) * f.horizon_ * f.num_states_ * f.num_actions_;
  if (rewards.size() != expected)
    throw InvalidInput("reward tables have " + std::to_string(rewards.size()) + " entries, expected " +
                       std::to_string(expected));
  for (double r : rewards) {
    if (std::isnan(r)) throw InvalidInput("reward table contains NaN");
  }
  f.rewards_ = std::move(rewards);
  f.set_prior(std::move(prior));
  return f;
}

double partial_return(const TaskFamily& tasks, int task, const Trajectory& traj, int from_step) {
  if (task < 0 || task >= tasks.num_tasks()) throw InvalidInput("task index out of range");
  if (static_cast<int>(traj.steps.size()) != tasks.horizon())
    throw InvalidInput("trajectory length does not match the task horizon");
  double total = 0.0;
  for (int t = std::max(0, from_step); t < tasks.horizon(); ++t) {
    const auto& step = traj.steps[t];
    if (step.state < 0 || step.state >= tasks.num_states() || step.action < 0 || step.action >= tasks.num_actions())
      throw InvalidInput("trajectory index out of range at t=" + std::to_string(t));
    total += tasks.reward(task, t, step.state, step.action);
  }
  return std::max(total, tasks.sentinel());
}

double trajectory_return(const TaskFamily& tasks, int task, const Trajectory& traj) {
  return partial_return(tasks, task, traj, 0);
}

}  // namespace hipi
