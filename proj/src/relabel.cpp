#include "hipi/relabel.hpp"

#include <algorithm>
#include <cmath>

namespace hipi {

namespace {

RelabelPosterior posterior_from_logits(const std::vector<double>& logits, const TaskFamily& tasks) {
  RelabelPosterior out;
  out.probs = sentinel_softmax(logits, tasks.prior_table(), tasks.sentinel(), &out.fallback);
  return out;
}

void require_goal_family(const TaskFamily& tasks, const char* strategy) {
  if (tasks.kind() != TaskKind::kGoal)
    throw UnsupportedStrategy(std::string(strategy) + " relabeling needs a goal family, got " + to_string(tasks.kind()));
}

}  // namespace

RelabelPosterior trajectory_posterior(const Trajectory& traj, const TaskFamily& tasks, std::span<const double> log_z) {
  const int K = tasks.num_tasks();
  if (static_cast<int>(log_z.size()) != K) throw InvalidInput("log_z size does not match the task count");
  const double threshold = tasks.threshold();
  std::vector<double> logits(K, tasks.sentinel());
  for (int k = 0; k < K; ++k) {
    const double r = trajectory_return(tasks, k, traj);
    if (r > threshold && log_z[k] > threshold) logits[k] = r - log_z[k];
  }
  return posterior_from_logits(logits, tasks);
}

RelabelPosterior transition_posterior(const Transition& tr, const SoftQView& q, std::span<const double> log_z,
                                      const TaskFamily& tasks) {
  const int K = tasks.num_tasks();
  if (q.num_tasks != K || static_cast<int>(log_z.size()) != K)
    throw InvalidInput("soft Q table does not cover the task family");
  if (tr.time_step < 0 || tr.time_step >= q.horizon) throw InvalidInput("transition time_step out of range");
  if (tr.state < 0 || tr.state >= q.num_states || tr.action < 0 || tr.action >= q.num_actions)
    throw InvalidInput("transition index out of range");
  const double threshold = tasks.threshold();
  std::vector<double> logits(K, tasks.sentinel());
  for (int k = 0; k < K; ++k) {
    const double value = q.at(k, tr.time_step, tr.state, tr.action);
    if (value > threshold && log_z[k] > threshold) logits[k] = value - log_z[k];
  }
  return posterior_from_logits(logits, tasks);
}

RelabelPosterior transition_posterior(const Transition& tr, const SoftSolution& sol, const TaskFamily& tasks) {
  return transition_posterior(tr, sol.view(), sol.log_z, tasks);
}

NormalizedScores normalize_scores(const std::vector<std::vector<double>>& scores, std::span<const double> column_weights,
                                  double sentinel, bool literal_mean_exp,
                                  std::optional<std::vector<double>> log_z_override) {
  if (scores.empty()) throw InvalidInput("score matrix is empty");
  const std::size_t B = scores.size();
  const std::size_t J = scores.front().size();
  const double threshold = exclusion_threshold(sentinel);
  NormalizedScores out;
  out.log_z.assign(J, sentinel);
  std::vector<double> weights(column_weights.begin(), column_weights.end());
  if (weights.empty()) weights.assign(J, 1.0);

  std::vector<double> column(B);
  for (std::size_t j = 0; j < J; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < B; ++i) {
      column[i] = scores[i][j];
      any = any || column[i] > threshold;
    }
    if (!any) {
      weights[j] = 0.0;
      continue;
    }
    if (log_z_override) {
      out.log_z[j] = (*log_z_override)[j];
    } else {
      const double lme = sentinel_log_mean_exp(column, sentinel);
      out.log_z[j] = literal_mean_exp ? std::exp(lme) : lme;
    }
  }

  out.posterior.resize(B);
  out.fallback.resize(B);
  std::vector<double> logits(J);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      const bool usable = scores[i][j] > threshold && weights[j] > 0.0 && out.log_z[j] > threshold;
      logits[j] = usable ? scores[i][j] - out.log_z[j] : sentinel;
    }
    bool fallback = false;
    out.posterior[i] = sentinel_softmax(logits, weights, sentinel, &fallback);
    out.fallback[i] = fallback;
  }
  return out;
}

RelabeledBatch batch_relabel_mc(std::span<const BatchItem> batch, const TaskFamily& tasks,
                                const McRelabelOptions& options, std::uint64_t seed) {
  if (batch.empty()) throw InvalidInput("cannot relabel an empty batch");
  const int K = tasks.num_tasks();
  if (options.mode == ScoreMode::kSoftQ && !options.soft_q)
    throw InvalidInput("soft_q scoring needs a soft Q table");

  std::vector<int> columns;
  for (const auto& item : batch) {
    if (const auto* tr = std::get_if<Transition>(&item)) {
      if (options.mode != ScoreMode::kSoftQ) throw InvalidInput("trajectory_return scoring needs trajectories");
      columns.push_back(tr->commanded_task);
    } else {
      const auto& traj = std::get<Trajectory>(item);
      if (options.mode != ScoreMode::kTrajectoryReturn) throw InvalidInput("soft_q scoring needs transitions");
      if (traj.commanded_task) columns.push_back(*traj.commanded_task);
    }
  }
  if (columns.empty()) {
    columns.resize(K);
    for (int k = 0; k < K; ++k) columns[k] = k;
  }
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  for (int c : columns) {
    if (c < 0 || c >= K) throw InvalidInput("commanded task " + std::to_string(c) + " out of range");
  }

  const std::size_t B = batch.size();
  const std::size_t J = columns.size();
  std::vector<std::vector<double>> scores(B, std::vector<double>(J));
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (const auto* tr = std::get_if<Transition>(&batch[i])) {
        scores[i][j] = options.soft_q->at(columns[j], tr->time_step, tr->state, tr->action);
      } else {
        scores[i][j] = trajectory_return(tasks, columns[j], std::get<Trajectory>(batch[i]));
      }
    }
  }

  std::vector<double> weights(J, 1.0);
  if (options.weight_by_prior) {
    for (std::size_t j = 0; j < J; ++j) weights[j] = tasks.prior(columns[j]);
  }
  std::optional<std::vector<double>> override_cols;
  if (options.log_z_override) {
    if (static_cast<int>(options.log_z_override->size()) != K) throw InvalidInput("log_z override size mismatch");
    override_cols.emplace(J);
    for (std::size_t j = 0; j < J; ++j) (*override_cols)[j] = (*options.log_z_override)[columns[j]];
  }
  const auto normalized =
      normalize_scores(scores, weights, tasks.sentinel(), options.literal_mean_exp, std::move(override_cols));

  RelabeledBatch out;
  out.columns = columns;
  out.estimator_log_z.assign(K, tasks.sentinel());
  for (std::size_t j = 0; j < J; ++j) {
    out.estimator_log_z[columns[j]] = normalized.log_z[j];
    bool any = false;
    for (std::size_t i = 0; i < B; ++i) any = any || scores[i][j] > tasks.threshold();
    if (!any) out.excluded_tasks.push_back(columns[j]);
  }
  Rng rng(seed);
  out.items.reserve(B);
  for (std::size_t i = 0; i < B; ++i) {
    RelabeledItem item;
    item.item_index = i;
    item.posterior.probs.assign(K, 0.0);
    item.posterior.fallback = normalized.fallback[i];
    for (std::size_t j = 0; j < J; ++j) item.posterior.probs[columns[j]] = normalized.posterior[i][j];
    item.sampled_task = columns[rng.categorical(normalized.posterior[i])];
    out.items.push_back(std::move(item));
  }
  return out;
}

std::optional<int> relabel_final_state(const Trajectory& traj, const TaskFamily& tasks) {
  require_goal_family(tasks, "final_state");
  if (traj.steps.empty()) throw InvalidInput("empty trajectory");
  return tasks.task_for_goal(traj.final_state());
}

std::optional<int> relabel_future_state(const Trajectory& traj, int from_step, int window, const TaskFamily& tasks,
                                        Rng& rng) {
  require_goal_family(tasks, "future_state");
  if (window < 1) throw InvalidInput("future_state window must be at least 1");
  const int T = static_cast<int>(traj.steps.size());
  if (from_step < 0 || from_step >= T) throw InvalidInput("from_step out of range");
  const int remaining = std::min(window, T - 1 - from_step);
  if (remaining <= 0) return tasks.task_for_goal(traj.final_state());
  const int offset = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(remaining)));
  return tasks.task_for_goal(traj.steps[from_step + offset].state);
}

std::optional<int> relabel_future_state(const Trajectory& traj, int from_step, int window, const TaskFamily& tasks,
                                        std::uint64_t seed) {
  Rng rng(seed);
  return relabel_future_state(traj, from_step, window, tasks, rng);
}

int relabel_random(const TaskFamily& tasks, Rng& rng) {
  return static_cast<int>(rng.categorical(tasks.prior_table()));
}

int relabel_random(const TaskFamily& tasks, std::uint64_t seed) {
  Rng rng(seed);
  return relabel_random(tasks, rng);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kIrlExact: return "irl_exact";
    case Strategy::kIrlLearned: return "irl";
    case Strategy::kIrlBatch: return "irl_batch";
    case Strategy::kFinalState: return "final_state";
    case Strategy::kFutureState: return "future_state";
    case Strategy::kRandom: return "random";
    case Strategy::kNone: return "none";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "irl") return Strategy::kIrlLearned;
  if (name == "irl_exact") return Strategy::kIrlExact;
  if (name == "irl_batch") return Strategy::kIrlBatch;
  if (name == "final_state") return Strategy::kFinalState;
  if (name == "future_state") return Strategy::kFutureState;
  if (name == "random") return Strategy::kRandom;
  if (name == "none") return Strategy::kNone;
  throw UnsupportedStrategy("unknown relabeling strategy '" + name + "'");
}

}  // namespace hipi
