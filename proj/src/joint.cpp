#include "hipi/joint.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "hipi/relabel.hpp"

namespace hipi {

Labeler commanded_labeler(int num_tasks) {
  return [num_tasks](const Trajectory&, int commanded) {
    std::vector<double> out(num_tasks, 0.0);
    out[commanded] = 1.0;
    return out;
  };
}

double JointDistribution::marginal(std::size_t i) const {
  double total = 0.0;
  for (int k = 0; k < num_tasks; ++k) total += at(i, k);
  return total;
}

std::vector<double> JointDistribution::conditional(std::size_t i) const {
  std::vector<double> out(num_tasks, 0.0);
  const double m = marginal(i);
  if (m <= 0.0) return out;
  for (int k = 0; k < num_tasks; ++k) out[k] = at(i, k) / m;
  return out;
}

JointDistribution build_joint(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                              const Labeler& labeler, double cap) {
  const int K = tasks.num_tasks();
  JointDistribution joint;
  joint.num_tasks = K;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (int commanded = 0; commanded < K; ++commanded) {
    const double p_cmd = tasks.prior(commanded);
    if (p_cmd == 0.0) continue;
    for (const auto& wt : enumerate_trajectories(mdp, policy, commanded, cap)) {
      const auto key = trajectory_key(mdp, wt.trajectory);
      auto [it, inserted] = slot.try_emplace(key, joint.trajectories.size());
      if (inserted) {
        joint.trajectories.push_back(wt.trajectory);
        joint.trajectories.back().commanded_task.reset();
        joint.probs.resize(joint.probs.size() + K, 0.0);
      }
      const auto labels = labeler(wt.trajectory, commanded);
      if (static_cast<int>(labels.size()) != K) throw InvalidInput("labeler returned the wrong number of tasks");
      for (int k = 0; k < K; ++k) joint.probs[it->second * K + k] += p_cmd * wt.probability * labels[k];
    }
  }
  return joint;
}

JointDistribution relabel_joint(const JointDistribution& q, const TaskFamily& tasks, std::span<const double> log_z) {
  JointDistribution out = q;
  for (std::size_t i = 0; i < q.trajectories.size(); ++i) {
    const double m = q.marginal(i);
    const auto post = trajectory_posterior(q.trajectories[i], tasks, log_z);
    for (int k = 0; k < q.num_tasks; ++k) out.probs[i * q.num_tasks + k] = m * post.probs[k];
  }
  return out;
}

JointDistribution relabel_joint(const JointDistribution& q, const Labeler& labeler) {
  JointDistribution out = q;
  for (std::size_t i = 0; i < q.trajectories.size(); ++i) {
    const double m = q.marginal(i);
    const auto labels = labeler(q.trajectories[i], -1);
    for (int k = 0; k < q.num_tasks; ++k) out.probs[i * q.num_tasks + k] = m * labels[k];
  }
  return out;
}

JointDistribution target_joint(const TabularMdp& mdp, const TaskFamily& tasks, std::span<const double> log_z,
                               double cap) {
  const int K = tasks.num_tasks();
  const double threshold = tasks.threshold();
  JointDistribution joint;
  joint.num_tasks = K;
  for (const auto& wt : enumerate_dynamics_support(mdp, cap)) {
    std::vector<double> row(K, 0.0);
    bool any = false;
    for (int k = 0; k < K; ++k) {
      const double r = trajectory_return(tasks, k, wt.trajectory);
      if (tasks.prior(k) == 0.0 || r <= threshold || log_z[k] <= threshold) continue;
      row[k] = tasks.prior(k) * wt.probability * std::exp(r - log_z[k]);
      any = any || row[k] > 0.0;
    }
    if (!any) continue;
    joint.trajectories.push_back(wt.trajectory);
    joint.probs.insert(joint.probs.end(), row.begin(), row.end());
  }
  return joint;
}

KlResult joint_kl(const TabularMdp& mdp, const TaskFamily& tasks, std::span<const double> log_z,
                  const JointDistribution& q) {
  const double threshold = tasks.threshold();
  KlResult result;
  double total = 0.0;
  for (std::size_t i = 0; i < q.trajectories.size(); ++i) {
    const auto& traj = q.trajectories[i];
    double log_dyn = 0.0;
    bool dyn_ready = false;
    for (int k = 0; k < q.num_tasks; ++k) {
      const double mass = q.at(i, k);
      if (mass <= 0.0) continue;
      if (!dyn_ready) {
        log_dyn = dynamics_log_likelihood(mdp, traj);
        dyn_ready = true;
      }
      const double r = trajectory_return(tasks, k, traj);
      if (tasks.prior(k) == 0.0 || r <= threshold || log_z[k] <= threshold || !std::isfinite(log_dyn)) {
        result.value = std::numeric_limits<double>::infinity();
        result.support_violation = true;
        result.offending = traj;
        result.offending_task = k;
        return result;
      }
      const double log_p = std::log(tasks.prior(k)) + log_dyn + r - log_z[k];
      total += mass * (std::log(mass) - log_p);
    }
  }
  result.value = total;
  return result;
}

KlResult joint_kl(const TabularMdp& mdp, const TaskFamily& tasks, const TabularPolicy& policy,
                  const Labeler& labeler, double cap) {
  const auto sol = soft_value_iteration(mdp, tasks);
  return joint_kl(mdp, tasks, sol.log_z, build_joint(mdp, tasks, policy, labeler, cap));
}

double categorical_kl(std::span<const double> p, std::span<const double> q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    total += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return total;
}

}  // namespace hipi
