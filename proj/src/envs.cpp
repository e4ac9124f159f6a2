#include "hipi/envs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hipi {

int GridLayout::state_at(int row, int col) const {
  if (row < 0 || row >= rows || col < 0 || col >= cols) return -1;
  return state_of[static_cast<std::size_t>(row) * cols + col];
}

GridLayout parse_layout(const std::vector<std::string>& rows) {
  if (rows.empty() || rows.front().empty()) throw InvalidInput("grid layout is empty");
  GridLayout layout;
  layout.rows = static_cast<int>(rows.size());
  layout.cols = static_cast<int>(rows.front().size());
  layout.state_of.assign(static_cast<std::size_t>(layout.rows) * layout.cols, -1);
  for (int r = 0; r < layout.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != layout.cols) throw InvalidInput("grid rows differ in length");
    for (int c = 0; c < layout.cols; ++c) {
      const char ch = rows[r][c];
      if (ch == '#') continue;
      if (ch != '.') throw InvalidInput(std::string("unexpected grid character '") + ch + "'");
      layout.state_of[static_cast<std::size_t>(r) * layout.cols + c] = layout.num_states();
      layout.cell_of.emplace_back(r, c);
    }
  }
  if (layout.num_states() == 0) throw InvalidInput("grid has no free cells");
  return layout;
}

GridWorld make_grid_world(const GridLayout& layout, int horizon, double slip, std::vector<double> initial) {
  if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidInput("slip must lie in [0,1]");
  constexpr int dr[kGridActions] = {-1, 1, 0, 0, 0};
  constexpr int dc[kGridActions] = {0, 0, -1, 1, 0};
  const int S = layout.num_states();
  std::vector<double> P(static_cast<std::size_t>(S) * kGridActions * S, 0.0);
  for (int s = 0; s < S; ++s) {
    const auto [r, c] = layout.cell_of[s];
    int dest[kGridActions];
    for (int a = 0; a < kGridActions; ++a) {
      const int n = layout.state_at(r + dr[a], c + dc[a]);
      dest[a] = n < 0 ? s : n;
    }
    for (int a = 0; a < kGridActions; ++a) {
      double* row = P.data() + (static_cast<std::size_t>(s) * kGridActions + a) * S;
      row[dest[a]] += 1.0 - slip;
      if (slip > 0.0) {
        for (int b = 0; b < kGridActions; ++b) row[dest[b]] += slip / kGridActions;
      }
    }
  }
  return {TabularMdp(S, kGridActions, horizon, std::move(P), std::move(initial)), layout};
}

CrossingGridworld make_crossing_gridworld() {
  const auto layout = parse_layout(std::vector<std::string>(5, "....."));
  CrossingGridworld out{
      .world = {TabularMdp(1, 1, 1, {1.0}, {1.0}), layout},
      .tasks = make_goal_family(TabularMdp(1, 1, 1, {1.0}, {1.0})),
      .demos = {},
  };
  out.a = layout.state_at(2, 0);
  out.b = layout.state_at(2, 4);
  out.c = layout.state_at(0, 2);
  out.d = layout.state_at(4, 2);
  std::vector<double> initial(layout.num_states(), 0.0);
  initial[out.a] = initial[out.c] = 0.5;
  out.world = make_grid_world(layout, 5, 0.0, std::move(initial));
  out.tasks = make_goal_family(out.world.mdp);

  Trajectory ab, cd;
  for (int i = 0; i < 4; ++i) {
    ab.steps.push_back({layout.state_at(2, i), kRight});
    cd.steps.push_back({layout.state_at(i, 2), kDown});
  }
  ab.steps.push_back({out.b, kStay});
  cd.steps.push_back({out.d, kStay});
  ab.commanded_task = *out.tasks.task_for_goal(out.b);
  cd.commanded_task = *out.tasks.task_for_goal(out.d);
  out.demos.trajectories = {ab, cd};
  return out;
}

TwoTaskChain make_two_task_chain() {
  constexpr int S = 5, A = 3;
  std::vector<double> P(S * A * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int next = std::clamp(s + a - 1, 0, S - 1);
      P[(s * A + a) * S + next] = 1.0;
    }
  }
  std::vector<double> initial(S, 0.0);
  initial[2] = 1.0;
  TabularMdp mdp(S, A, 4, std::move(P), std::move(initial));
  std::vector<StationaryReward> tables(2, StationaryReward(S, std::vector<double>(A)));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      tables[0][s][a] = -std::abs(s - 0);
      tables[1][s][a] = -std::abs(s - 4);
    }
  }
  auto tasks = make_discrete_family(mdp, tables);
  return {std::move(mdp), std::move(tasks)};
}

std::vector<std::string> four_rooms_rows(int dilation) {
  if (dilation < 1) throw InvalidInput("dilation must be at least 1");
  static const std::vector<std::string> base = {
      ".....#.....",
      ".....#.....",
      "...........",
      ".....#.....",
      ".....#.....",
      "#.####.....",
      ".....###.##",
      ".....#.....",
      ".....#.....",
      "...........",
      ".....#.....",
  };
  std::vector<std::string> rows;
  for (const auto& line : base) {
    std::string wide;
    for (char ch : line) wide.append(dilation, ch);
    for (int i = 0; i < dilation; ++i) rows.push_back(wide);
  }
  return rows;
}

GridWorld make_four_rooms(int dilation, double slip, int horizon, std::optional<int> start) {
  const auto layout = parse_layout(four_rooms_rows(dilation));
  if (layout.wall_count() != kFourRoomsWalls * dilation * dilation)
    throw std::logic_error("four-rooms wall count drifted");
  const int s0 = start.value_or(layout.state_at(layout.rows - 1, 0));
  if (s0 < 0 || s0 >= layout.num_states()) throw InvalidInput("start state out of range");
  std::vector<double> initial(layout.num_states(), 0.0);
  initial[s0] = 1.0;
  return make_grid_world(layout, horizon, slip, std::move(initial));
}

GridWorld make_open_grid(int rows, int cols, int horizon, double slip, int start) {
  if (rows <= 0 || cols <= 0) throw InvalidInput("grid dimensions must be positive");
  const auto layout = parse_layout(std::vector<std::string>(rows, std::string(cols, '.')));
  if (start < 0 || start >= layout.num_states()) throw InvalidInput("start state out of range");
  std::vector<double> initial(layout.num_states(), 0.0);
  initial[start] = 1.0;
  return make_grid_world(layout, horizon, slip, std::move(initial));
}

TabularMdp make_random_mdp(std::uint64_t seed, const RandomMdpSizes& sizes) {
  const int S = sizes.num_states, A = sizes.num_actions;
  if (S <= 0 || A <= 0 || sizes.horizon <= 0) throw InvalidInput("random MDP sizes must be positive");
  Rng rng(seed);
  std::vector<double> P(static_cast<std::size_t>(S) * A * S, 0.0);
  for (std::size_t row = 0; row < static_cast<std::size_t>(S) * A; ++row) {
    if (sizes.deterministic) {
      P[row * S + rng.uniform_index(S)] = 1.0;
    } else {
      const auto probs = rng.dirichlet(S, sizes.alpha);
      std::copy(probs.begin(), probs.end(), P.begin() + row * S);
    }
  }
  std::vector<double> initial(S, 1.0 / S);
  if (sizes.initial == InitialKind::kDirichlet) {
    initial = rng.dirichlet(S, sizes.alpha);
  } else if (sizes.initial == InitialKind::kOneHot) {
    std::fill(initial.begin(), initial.end(), 0.0);
    initial[rng.uniform_index(S)] = 1.0;
  }
  return TabularMdp(S, A, sizes.horizon, std::move(P), std::move(initial));
}

TaskFamily make_random_tasks(const TabularMdp& mdp, int num_tasks, std::uint64_t seed, double lo, double hi,
                             bool dirichlet_prior) {
  if (num_tasks <= 0) throw InvalidInput("num_tasks must be positive");
  Rng rng(seed);
  std::vector<StationaryReward> tables(num_tasks);
  for (auto& table : tables) {
    table.assign(mdp.num_states(), std::vector<double>(mdp.num_actions()));
    for (auto& row : table) {
      for (double& r : row) r = lo + (hi - lo) * rng.uniform();
    }
  }
  std::optional<std::vector<double>> prior;
  if (dirichlet_prior) {
    prior = rng.dirichlet(num_tasks, 1.0);
    // The Dirichlet draw sums to 1 up to rounding; push the residue onto the largest entry.
    double sum = 0.0;
    for (double p : *prior) sum += p;
    auto it = std::max_element(prior->begin(), prior->end());
    *it += 1.0 - sum;
  }
  return make_discrete_family(mdp, tables, std::move(prior));
}

std::vector<int> reachable_states(const TabularMdp& mdp, int steps) {
  const int S = mdp.num_states();
  std::vector<char> seen(S, 0);
  std::vector<int> frontier;
  for (int s = 0; s < S; ++s) {
    if (mdp.initial(s) > 0.0) {
      seen[s] = 1;
      frontier.push_back(s);
    }
  }
  for (int step = 0; step < steps && !frontier.empty(); ++step) {
    std::vector<int> next;
    for (int s : frontier) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        for (int n = 0; n < S; ++n) {
          if (mdp.p(s, a, n) > 0.0 && !seen[n]) {
            seen[n] = 1;
            next.push_back(n);
          }
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<int> out;
  for (int s = 0; s < S; ++s) {
    if (seen[s]) out.push_back(s);
  }
  return out;
}

std::string render_grid(const GridLayout& layout, const std::map<int, char>& marks) {
  std::ostringstream os;
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      const int s = layout.state_at(r, c);
      if (s < 0) {
        os << '#';
        continue;
      }
      const auto it = marks.find(s);
      os << (it == marks.end() ? '.' : it->second);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hipi
