#include "hipi/enumeration.hpp"

#include <cmath>
#include <functional>

#include "hipi/numerics.hpp"

namespace hipi {

namespace {

// Depth-first walk over (state, action) sequences. `action_weight(t, s, a)` returns the
// multiplicative factor for choosing `a`; zero-probability prefixes are pruned.
template <typename ActionWeight>
std::vector<WeightedTrajectory> walk(const TabularMdp& mdp, ActionWeight&& action_weight) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int T = mdp.horizon();
  std::vector<WeightedTrajectory> out;
  Trajectory current;
  current.steps.resize(T);

  std::function<void(int, double)> visit = [&](int t, double prefix) {
    const int s = current.steps[t].state;
    for (int a = 0; a < A; ++a) {
      const double pa = prefix * action_weight(t, s, a);
      if (pa == 0.0) continue;
      current.steps[t].action = a;
      if (t + 1 == T) {
        out.push_back({current, pa});
        continue;
      }
      for (int next = 0; next < S; ++next) {
        const double pn = pa * mdp.p(s, a, next);
        if (pn == 0.0) continue;
        current.steps[t + 1].state = next;
        visit(t + 1, pn);
      }
    }
  };

  for (int s = 0; s < S; ++s) {
    if (mdp.initial(s) == 0.0) continue;
    current.steps[0].state = s;
    visit(0, mdp.initial(s));
  }
  return out;
}

}  // namespace

double trajectory_space_size(const TabularMdp& mdp) {
  return std::pow(static_cast<double>(mdp.num_states()) * mdp.num_actions(), mdp.horizon());
}

void check_enumeration_cap(const TabularMdp& mdp, double cap) {
  const double required = trajectory_space_size(mdp);
  if (required > cap) throw EnumerationTooLarge(required, cap);
}

std::vector<WeightedTrajectory> enumerate_trajectories(const TabularMdp& mdp, const TabularPolicy& policy,
                                                       int task, double cap) {
  check_enumeration_cap(mdp, cap);
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
    throw InvalidInput("policy shape does not match the MDP");
  if (task < 0 || (policy.num_tasks() > 1 && task >= policy.num_tasks()))
    throw InvalidInput("task index out of range");
  return walk(mdp, [&](int t, int s, int a) { return policy.prob(task, t, s, a); });
}

std::vector<WeightedTrajectory> enumerate_dynamics_support(const TabularMdp& mdp, double cap) {
  check_enumeration_cap(mdp, cap);
  return walk(mdp, [](int, int, int) { return 1.0; });
}

std::uint64_t trajectory_key(const TabularMdp& mdp, const Trajectory& traj) {
  const std::uint64_t radix = static_cast<std::uint64_t>(mdp.num_states()) * mdp.num_actions();
  std::uint64_t key = 0;
  for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
    key = key * radix + static_cast<std::uint64_t>(it->state) * mdp.num_actions() + it->action;
  }
  return key;
}

}  // namespace hipi
