#include "hipi/hipi_rl.hpp"

#include <algorithm>
#include <cmath>

#include "hipi/evaluation.hpp"

namespace hipi {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidInput("replay buffer capacity must be positive");
}

void ReplayBuffer::add(Entry entry) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(std::move(entry));
}

void ReplayBuffer::add_episode(const Trajectory& traj, std::optional<int> final_next_state) {
  if (!traj.commanded_task) throw InvalidInput("replay episodes need a commanded task");
  auto states = std::make_shared<std::vector<int>>();
  states->reserve(traj.steps.size());
  for (const auto& step : traj.steps) states->push_back(step.state);
  const int T = static_cast<int>(traj.steps.size());
  for (int t = 0; t < T; ++t) {
    Transition tr;
    tr.state = traj.steps[t].state;
    tr.action = traj.steps[t].action;
    tr.next_state = t + 1 < T ? traj.steps[t + 1].state : final_next_state.value_or(traj.steps[t].state);
    tr.commanded_task = *traj.commanded_task;
    tr.time_step = t;
    add({tr, states});
  }
}

double LearnerState::soft_value(int k, int t, int s) const {
  if (t >= horizon) return 0.0;
  return sentinel_log_sum_exp(view().row(k, t, s), sentinel);
}

LearnerState make_learner(const TabularMdp& mdp, const TaskFamily& tasks, const HipiRlConfig& config) {
  if (!(config.relabel_fraction >= 0.0 && config.relabel_fraction <= 1.0))
    throw InvalidInput("relabel_fraction must lie in [0,1]");
  if (config.batch_size <= 0) throw InvalidInput("batch_size must be positive");
  if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0))
    throw InvalidInput("learning_rate must lie in (0,1]");
  if (tasks.num_states() != mdp.num_states() || tasks.num_actions() != mdp.num_actions() ||
      tasks.horizon() != mdp.horizon())
    throw InvalidInput("task family shape does not match the MDP");
  LearnerState state;
  state.num_tasks = tasks.num_tasks();
  state.horizon = mdp.horizon();
  state.num_states = mdp.num_states();
  state.num_actions = mdp.num_actions();
  state.sentinel = tasks.sentinel();
  state.q.assign(static_cast<std::size_t>(state.num_tasks) * state.horizon * state.num_states * state.num_actions,
                 std::max(config.initial_q, tasks.sentinel()));
  state.config = config;
  return state;
}

void soft_q_update(LearnerState& state, std::span<const Transition> batch, const TabularMdp& mdp,
                   const TaskFamily& tasks, std::span<const double> step_sizes) {
  if (!step_sizes.empty() && step_sizes.size() != batch.size())
    throw InvalidInput("step_sizes must match the batch size");
  const double threshold = tasks.threshold();
  const double gamma = state.config.discount;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& tr = batch[i];
    check_transition(mdp, tr);
    const int k = tr.commanded_task;
    if (k < 0 || k >= state.num_tasks) throw InvalidInput("transition task out of range");
    const double next_value = state.soft_value(k, tr.time_step + 1, tr.next_state);
    const double r = tasks.reward(k, tr.time_step, tr.state, tr.action);
    const double target = std::max(r + gamma * next_value, state.sentinel);
    double& q = state.at(k, tr.time_step, tr.state, tr.action);
    const double eta = step_sizes.empty() ? state.config.learning_rate : step_sizes[i];
    q = q <= threshold ? target : std::max((1.0 - eta) * q + eta * target, state.sentinel);
  }
  ++state.update_count;
}

void soft_q_update(LearnerState& state, std::span<const BatchItem> items, const RelabeledBatch& relabeled,
                   const TabularMdp& mdp, const TaskFamily& tasks) {
  std::vector<Transition> batch;
  batch.reserve(relabeled.items.size());
  for (const auto& item : relabeled.items) {
    const auto* tr = std::get_if<Transition>(&items[item.item_index]);
    if (!tr) throw InvalidInput("soft Q updates need transition items");
    Transition copy = *tr;
    copy.commanded_task = item.sampled_task;
    batch.push_back(copy);
  }
  soft_q_update(state, batch, mdp, tasks);
}

std::vector<double> learned_log_partition(const LearnerState& state, const TabularMdp& mdp) {
  std::vector<double> out(state.num_tasks);
  std::vector<double> v0(state.num_states, state.sentinel);
  for (int k = 0; k < state.num_tasks; ++k) {
    for (int s = 0; s < state.num_states; ++s) {
      v0[s] = mdp.initial(s) > 0.0 ? state.soft_value(k, 0, s) : state.sentinel;
    }
    out[k] = log_partition_from_values(mdp, v0, state.sentinel);
  }
  return out;
}

std::vector<CurveRecord> evaluate_greedy(const LearnerState& state, const TabularMdp& mdp, const TaskFamily& tasks,
                                         long env_step) {
  const auto eval = evaluate_policy_exact(greedy_policy(state.view()), mdp, tasks);
  std::vector<CurveRecord> out(state.num_tasks);
  for (int k = 0; k < state.num_tasks; ++k) out[k] = {env_step, k, eval.avg_return[k], eval.success[k]};
  return out;
}

namespace {

class Relabeler {
 public:
  Relabeler(const TabularMdp& mdp, const TaskFamily& tasks, Strategy strategy, const HipiRlConfig& config)
      : mdp_(mdp), tasks_(tasks), strategy_(strategy), config_(config) {
    if ((strategy == Strategy::kFinalState || strategy == Strategy::kFutureState) && tasks.kind() != TaskKind::kGoal)
      throw UnsupportedStrategy(to_string(strategy) + " relabeling needs a goal family");
    if (strategy == Strategy::kIrlExact) exact_ = soft_value_iteration(mdp, tasks);
  }

  // Rewrites the commanded task of the first `count` transitions.
  void apply(std::vector<Transition>& batch, const std::vector<const ReplayBuffer::Entry*>& entries, int count,
             const LearnerState& learner, Rng& rng, std::vector<long>& counts) {
    if (count == 0 || strategy_ == Strategy::kNone) return;
    if (strategy_ == Strategy::kIrlLearned &&
        (log_z_.empty() || learner.update_count - refreshed_at_ >= config_.logz_refresh_interval)) {
      log_z_ = learned_log_partition(learner, mdp_);
      refreshed_at_ = learner.update_count;
    }
    std::optional<RelabeledBatch> in_batch;
    if (strategy_ == Strategy::kIrlBatch) {
      std::vector<BatchItem> items(batch.begin(), batch.end());
      McRelabelOptions options;
      options.mode = ScoreMode::kSoftQ;
      options.soft_q = learner.view();
      in_batch = batch_relabel_mc(items, tasks_, options, rng.engine()());
    }
    for (int i = 0; i < count; ++i) {
      auto& tr = batch[i];
      const auto& states = *entries[i]->episode_states;
      std::optional<int> label;
      switch (strategy_) {
        case Strategy::kIrlExact:
          label = static_cast<int>(rng.categorical(transition_posterior(tr, *exact_, tasks_).probs));
          break;
        case Strategy::kIrlLearned:
          label = static_cast<int>(rng.categorical(transition_posterior(tr, learner.view(), log_z_, tasks_).probs));
          break;
        case Strategy::kIrlBatch:
          label = in_batch->items[i].sampled_task;
          break;
        case Strategy::kFinalState:
          label = tasks_.task_for_goal(states.back());
          break;
        case Strategy::kFutureState: {
          const int T = static_cast<int>(states.size());
          const int remaining = std::min(config_.future_window, T - 1 - tr.time_step);
          const int target = remaining <= 0 ? states.back()
                                            : states[tr.time_step + 1 + static_cast<int>(rng.uniform_index(remaining))];
          label = tasks_.task_for_goal(target);
          break;
        }
        case Strategy::kRandom:
          label = relabel_random(tasks_, rng);
          break;
        case Strategy::kNone:
          break;
      }
      if (label) {
        tr.commanded_task = *label;
        ++counts[*label];
      }
    }
  }

 private:
  const TabularMdp& mdp_;
  const TaskFamily& tasks_;
  Strategy strategy_;
  HipiRlConfig config_;
  std::optional<SoftSolution> exact_;
  std::vector<double> log_z_;
  long refreshed_at_ = 0;
};

std::vector<double> behavior_row(const LearnerState& learner, int k, int t, int s) {
  return sentinel_softmax(learner.view().row(k, t, s), {}, learner.sentinel, nullptr);
}

}  // namespace

HipiRlResult run_hipi_rl(const TabularMdp& mdp, const TaskFamily& tasks, Strategy strategy,
                         const HipiRlConfig& config, std::span<const Trajectory> dataset) {
  if (config.total_env_steps < 0 || config.offline_updates < 0) throw InvalidInput("step budgets must be nonnegative");
  if (config.eval_period <= 0) throw InvalidInput("eval_period must be positive");
  HipiRlResult result;
  result.learner = make_learner(mdp, tasks, config);
  result.relabel_counts.assign(tasks.num_tasks(), 0);
  auto& learner = result.learner;
  ReplayBuffer buffer(config.buffer_capacity);
  for (const auto& traj : dataset) {
    check_trajectory(mdp, traj);
    buffer.add_episode(traj);
  }
  Relabeler relabeler(mdp, tasks, strategy, config);
  Rng env_rng(mix_seed(config.seed, 0));
  Rng replay_rng(mix_seed(config.seed, 1));

  const int relabel_count =
      static_cast<int>(std::lround(config.relabel_fraction * static_cast<double>(config.batch_size)));
  std::vector<Transition> batch(config.batch_size);
  std::vector<const ReplayBuffer::Entry*> entries(config.batch_size);

  auto update_once = [&] {
    if (buffer.size() == 0) return;
    for (int i = 0; i < config.batch_size; ++i) {
      entries[i] = &buffer.sample(replay_rng);
      batch[i] = entries[i]->transition;
    }
    relabeler.apply(batch, entries, relabel_count, learner, replay_rng, result.relabel_counts);
    soft_q_update(learner, batch, mdp, tasks);
  };
  auto evaluate = [&](long env_step) {
    auto records = evaluate_greedy(learner, mdp, tasks, env_step);
    result.curve.insert(result.curve.end(), records.begin(), records.end());
  };

  if (config.total_env_steps == 0) {
    for (long u = 0; u < config.offline_updates; ++u) update_once();
    evaluate(0);
    return result;
  }

  evaluate(0);
  const int T = mdp.horizon();
  long env_step = 0;
  while (env_step < config.total_env_steps) {
    const int task = relabel_random(tasks, env_rng);
    auto states = std::make_shared<std::vector<int>>(T);
    std::vector<Transition> episode(T);
    int s = static_cast<int>(env_rng.categorical(mdp.initial_table()));
    for (int t = 0; t < T; ++t) {
      const auto row = behavior_row(learner, task, t, s);
      const int a = static_cast<int>(env_rng.categorical(row));
      const int next = sample_next_state(mdp, s, a, env_rng);
      (*states)[t] = s;
      episode[t] = {s, a, next, task, t};
      s = next;
    }
    // The episode's state list is complete before its transitions become sampleable.
    for (int t = 0; t < T && env_step < config.total_env_steps; ++t) {
      buffer.add({episode[t], states});
      ++env_step;
      ++learner.step_count;
      for (int u = 0; u < config.updates_per_env_step; ++u) update_once();
      if (env_step % config.eval_period == 0) evaluate(env_step);
    }
  }
  if (env_step % config.eval_period != 0) evaluate(env_step);
  return result;
}

}  // namespace hipi
