#pragma once

#include <vector>

#include "hipi/mdp.hpp"
#include "hipi/task_family.hpp"

namespace hipi::testing {

// One state, `actions` actions, horizon T.
inline TabularMdp single_state(int actions, int horizon) {
  return TabularMdp(1, actions, horizon, std::vector<double>(actions, 1.0), {1.0});
}

// Two states; every action moves 0 -> 1 -> 1 with probability `stay` of staying put.
inline TabularMdp two_state_chain(double stay, int horizon) {
  // [s][a][s'] with two actions that behave identically
  std::vector<double> P = {stay, 1 - stay, stay, 1 - stay, 0.0, 1.0, 0.0, 1.0};
  return TabularMdp(2, 2, horizon, P, {1.0, 0.0});
}

inline TabularMdp mixing_chain(int horizon) {
  // action 0 keeps 0.7 / moves 0.3, action 1 the reverse
  std::vector<double> P = {0.7, 0.3, 0.3, 0.7, 0.3, 0.7, 0.7, 0.3};
  return TabularMdp(2, 2, horizon, P, {0.5, 0.5});
}

}  // namespace hipi::testing
