#pragma once

#include <cstdint>
#include <vector>

#include "hipi/mdp.hpp"

namespace hipi {

inline constexpr double kDefaultEnumerationCap = 1e6;

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

/// (num_states * num_actions)^horizon, the size of the full trajectory space.
double trajectory_space_size(const TabularMdp& mdp);

/// Throws EnumerationTooLarge when the trajectory space exceeds `cap`.
void check_enumeration_cap(const TabularMdp& mdp, double cap);

/// Every trajectory with nonzero probability under `policy` for `task`, in
/// lexicographic (state, action) order.
std::vector<WeightedTrajectory> enumerate_trajectories(const TabularMdp& mdp, const TabularPolicy& policy,
                                                       int task, double cap = kDefaultEnumerationCap);

/// Every trajectory whose state sequence has nonzero probability under the dynamics,
/// paired with exp(dynamics_log_likelihood). Action choices are unconstrained.
std::vector<WeightedTrajectory> enumerate_dynamics_support(const TabularMdp& mdp,
                                                           double cap = kDefaultEnumerationCap);

/// Mixed-radix index of a trajectory in the full trajectory space.
std::uint64_t trajectory_key(const TabularMdp& mdp, const Trajectory& traj);

}  // namespace hipi
