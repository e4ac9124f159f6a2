#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

/// Demonstrations for behavior cloning. Commanded labels are ignored.
struct DemonstrationSet {
  std::vector<Trajectory> trajectories;

  /// Throws InvalidInput when empty or when a trajectory does not fit the MDP.
  void check(const TabularMdp& mdp) const;
};

enum class BcMode { kIrl, kTaskAgnostic, kUnnormalized };

std::string to_string(BcMode mode);
BcMode bc_mode_from_string(const std::string& name);

struct BcOptions {
  /// Draw one label per trajectory from its posterior instead of weighting by it.
  bool sample_labels = false;
  /// Additive pseudo-count per action.
  double smoothing = 1.0;
};

struct BcResult {
  TabularPolicy policy;
  /// weights[i][k]: how much trajectory i counts toward task k. Task-agnostic mode
  /// has a single column of ones.
  std::vector<std::vector<double>> weights;
  /// Trajectories whose posterior fell back to the prior.
  std::size_t fallback_count = 0;
};

/// Per-trajectory label weights: the trajectory posterior under exact log Z (irl), or
/// under log Z = 0 (unnormalized).
std::vector<std::vector<double>> bc_weights(const DemonstrationSet& demos, const TabularMdp& mdp,
                                            const TaskFamily& tasks, BcMode mode, std::size_t* fallback_count = nullptr);

/// Weighted counting fit: pi[k][t][s][a] proportional to smoothing + sum_i w[i][k] 1[(s,a) at t in tau_i].
/// Rows with no mass and no smoothing are uniform.
TabularPolicy fit_weighted_counts(const DemonstrationSet& demos, const std::vector<std::vector<double>>& weights,
                                  const TabularMdp& mdp, double smoothing);

/// sum_i sum_k w[i][k] sum_t log pi(a_t|s_t,k,t) + smoothing * sum_{rows,a} log pi.
/// fit_weighted_counts maximizes this over tabular policies.
double bc_objective(const TabularPolicy& policy, const DemonstrationSet& demos,
                    const std::vector<std::vector<double>>& weights, double smoothing);

BcResult run_hipi_bc(const DemonstrationSet& demos, const TabularMdp& mdp, const TaskFamily& tasks, BcMode mode,
                     std::uint64_t seed, const BcOptions& options = {});

}  // namespace hipi
