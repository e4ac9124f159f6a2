#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hipi/hipi_bc.hpp"
#include "hipi/mdp.hpp"
#include "hipi/task_family.hpp"

namespace hipi {

enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
inline constexpr int kGridActions = 5;

/// Free cells of a rectangular grid, numbered row-major.
struct GridLayout {
  int rows = 0;
  int cols = 0;
  std::vector<int> state_of;  // [row * cols + col] -> state, -1 for walls
  std::vector<std::pair<int, int>> cell_of;  // state -> (row, col)

  int num_states() const { return static_cast<int>(cell_of.size()); }
  int state_at(int row, int col) const;
  int wall_count() const { return rows * cols - num_states(); }
};

/// Rows of '#' (wall) and '.' (free).
GridLayout parse_layout(const std::vector<std::string>& rows);

struct GridWorld {
  TabularMdp mdp;
  GridLayout layout;
};

/// Four moves plus stay; a blocked move stays put. With probability `slip` the action
/// is replaced by one drawn uniformly from all five.
GridWorld make_grid_world(const GridLayout& layout, int horizon, double slip, std::vector<double> initial);

struct CrossingGridworld {
  GridWorld world;
  TaskFamily tasks;
  DemonstrationSet demos;
  int a = 0, b = 0, c = 0, d = 0;
};

/// 5x5 open grid. A=(2,0) to B=(2,4) along the middle row and C=(0,2) to D=(4,2)
/// down the middle column; both paths pass the centre at t=2. T=5, start uniform on
/// {A, C}, goal family over all cells. The dataset holds the two straight paths
/// labelled with their end goals.
CrossingGridworld make_crossing_gridworld();

/// Five-cell chain with actions {left, stay, right}, start in the middle, T=4.
/// Task 0 rewards -|s - 0| and task 1 rewards -|s - 4|, uniform prior.
struct TwoTaskChain {
  TabularMdp mdp;
  TaskFamily tasks;
};
TwoTaskChain make_two_task_chain();

/// Classic 11x11 four-rooms interior, each cell blown up to dilation x dilation.
std::vector<std::string> four_rooms_rows(int dilation);
inline constexpr int kFourRoomsWalls = 17;  // at dilation 1
inline constexpr int kFourRoomsFree = 104;

/// Starts in the lower-left corner unless `start` is given.
GridWorld make_four_rooms(int dilation, double slip = 0.0, int horizon = 12, std::optional<int> start = std::nullopt);

GridWorld make_open_grid(int rows, int cols, int horizon, double slip = 0.0, int start = 0);

enum class InitialKind { kDirichlet, kOneHot, kUniform };

struct RandomMdpSizes {
  int num_states = 3;
  int num_actions = 2;
  int horizon = 2;
  /// One-hot rows with a uniformly drawn successor instead of Dirichlet rows.
  bool deterministic = false;
  double alpha = 1.0;
  InitialKind initial = InitialKind::kDirichlet;
};

/// Dirichlet(alpha) transition rows; same seed, same tables.
TabularMdp make_random_mdp(std::uint64_t seed, const RandomMdpSizes& sizes);

/// Stationary rewards uniform on [lo, hi] and a Dirichlet(1) prior (uniform prior
/// when `dirichlet_prior` is false).
TaskFamily make_random_tasks(const TabularMdp& mdp, int num_tasks, std::uint64_t seed, double lo = -1.0,
                             double hi = 1.0, bool dirichlet_prior = true);

/// States reachable from the support of the initial distribution in at most `steps` moves.
std::vector<int> reachable_states(const TabularMdp& mdp, int steps);

/// Grid picture: '#' walls, '.' free cells, overridden by `marks` (state -> char).
std::string render_grid(const GridLayout& layout, const std::map<int, char>& marks = {});

}  // namespace hipi
