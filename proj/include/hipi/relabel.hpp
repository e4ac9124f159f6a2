#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/numerics.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

/// Normalized distribution over task indices.
struct RelabelPosterior {
  std::vector<double> probs;
  /// Set when every task was excluded and the prior was returned instead.
  bool fallback = false;
};

/// q(psi | tau) proportional to p(psi) exp(R_psi(tau) - logZ(psi)).
RelabelPosterior trajectory_posterior(const Trajectory& traj, const TaskFamily& tasks, std::span<const double> log_z);

/// q(psi | s_t, a_t) proportional to p(psi) exp(Q[psi][t][s][a] - logZ(psi)).
RelabelPosterior transition_posterior(const Transition& tr, const SoftQView& q, std::span<const double> log_z,
                                      const TaskFamily& tasks);
RelabelPosterior transition_posterior(const Transition& tr, const SoftSolution& sol, const TaskFamily& tasks);

enum class ScoreMode { kSoftQ, kTrajectoryReturn };

using BatchItem = std::variant<Transition, Trajectory>;

struct McRelabelOptions {
  ScoreMode mode = ScoreMode::kTrajectoryReturn;
  /// Required for ScoreMode::kSoftQ.
  std::optional<SoftQView> soft_q;
  /// Use the mean of exp(R) itself in place of its log (ablation of the estimator).
  bool literal_mean_exp = false;
  /// Multiply the softmax by the task prior; otherwise uniform over batch tasks.
  bool weight_by_prior = false;
  /// Replace the in-batch estimate with these log Z values (indexed by task).
  std::optional<std::vector<double>> log_z_override;
};

struct RelabeledItem {
  std::size_t item_index = 0;
  int sampled_task = 0;
  RelabelPosterior posterior;  // over all tasks; zero outside the batch's columns
};

struct RelabeledBatch {
  std::vector<RelabeledItem> items;
  /// Unique tasks forming the score columns, ascending.
  std::vector<int> columns;
  /// Per task; the family's sentinel for tasks outside the columns or excluded.
  std::vector<double> estimator_log_z;
  /// Columns whose every score was excluded.
  std::vector<int> excluded_tasks;
};

/// Score-matrix core of the in-batch estimator: scores[i][j] for item i, column j.
struct NormalizedScores {
  std::vector<double> log_z;                  // per column
  std::vector<std::vector<double>> posterior;  // per item, per column
  std::vector<bool> fallback;                  // per item
};

NormalizedScores normalize_scores(const std::vector<std::vector<double>>& scores, std::span<const double> column_weights,
                                  double sentinel, bool literal_mean_exp = false,
                                  std::optional<std::vector<double>> log_z_override = std::nullopt);

/// In-batch Monte-Carlo inverse RL. Columns are the unique commanded tasks of the batch,
/// or every task when no item carries a label.
RelabeledBatch batch_relabel_mc(std::span<const BatchItem> batch, const TaskFamily& tasks,
                                const McRelabelOptions& options, std::uint64_t seed);

/// Goal family only; empty when the reached state is not one of the family's goals.
std::optional<int> relabel_final_state(const Trajectory& traj, const TaskFamily& tasks);

/// Goal family only: a uniformly chosen state among the next min(window, remaining)
/// states after `from_step`; the final state when nothing remains.
std::optional<int> relabel_future_state(const Trajectory& traj, int from_step, int window, const TaskFamily& tasks,
                                        Rng& rng);
std::optional<int> relabel_future_state(const Trajectory& traj, int from_step, int window, const TaskFamily& tasks,
                                        std::uint64_t seed);

int relabel_random(const TaskFamily& tasks, Rng& rng);
int relabel_random(const TaskFamily& tasks, std::uint64_t seed);

enum class Strategy { kIrlExact, kIrlLearned, kIrlBatch, kFinalState, kFutureState, kRandom, kNone };

std::string to_string(Strategy s);
/// Accepts irl, irl_exact, irl_batch, final_state, future_state, random, none.
Strategy strategy_from_string(const std::string& name);

}  // namespace hipi
