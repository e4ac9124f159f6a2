#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hipi/enumeration.hpp"
#include "hipi/mdp.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

/// Relabeling distribution q(psi | tau, commanded task).
using Labeler = std::function<std::vector<double>(const Trajectory&, int commanded)>;

/// Keeps the commanded label.
Labeler commanded_labeler(int num_tasks);

/// Tabulated q(tau, psi) over enumerated trajectories.
struct JointDistribution {
  int num_tasks = 0;
  std::vector<Trajectory> trajectories;
  std::vector<double> probs;  // [trajectory][task]

  double at(std::size_t i, int k) const { return probs[i * num_tasks + k]; }
  double marginal(std::size_t i) const;
  /// q(psi | tau_i); zero row if the trajectory has no mass.
  std::vector<double> conditional(std::size_t i) const;
};

/// Commanded task ~ prior, tau ~ policy(.|commanded), label ~ labeler(tau, commanded).
JointDistribution build_joint(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                              const Labeler& labeler, double cap = kDefaultEnumerationCap);

/// Same trajectory marginal, labels replaced by the inverse-RL posterior under `log_z`.
JointDistribution relabel_joint(const JointDistribution& q, const TaskFamily& tasks, std::span<const double> log_z);

/// Same trajectory marginal, labels replaced by `labeler(tau, -1)`.
JointDistribution relabel_joint(const JointDistribution& q, const Labeler& labeler);

/// p(tau, psi) = p(psi) p_dyn(tau) exp(R_psi(tau) - logZ(psi)) over the dynamics support.
JointDistribution target_joint(const TabularMdp& mdp, const TaskFamily& tasks, std::span<const double> log_z,
                               double cap = kDefaultEnumerationCap);

struct KlResult {
  double value = 0.0;  // +inf on a support violation
  bool support_violation = false;
  std::optional<Trajectory> offending;
  int offending_task = -1;
};

/// D_KL(q(tau,psi) || p(tau,psi)) against the target built from `log_z`.
KlResult joint_kl(const TabularMdp& mdp, const TaskFamily& tasks, std::span<const double> log_z,
                  const JointDistribution& q);

/// Convenience form: solves for log Z and builds q from policy and labeler.
KlResult joint_kl(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                  const Labeler& labeler, double cap = kDefaultEnumerationCap);

/// D_KL(p || q) between two distributions over the same support; +inf if p puts
/// mass where q has none.
double categorical_kl(std::span<const double> p, std::span<const double> q);

}  // namespace hipi
