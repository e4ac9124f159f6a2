#include "hipi/mdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hipi/numerics.hpp"

namespace hipi {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string join(const std::vector<std::string>& lines) {
  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) os << "; ";
    os << lines[i];
  }
  return os.str();
}

}  // namespace

std::vector<std::string> TabularMdp::violations(int num_states, int num_actions, int horizon,
                                                const std::vector<double>& transition,
                                                const std::vector<double>& initial) {
  std::vector<std::string> out;
  if (num_states <= 0) out.push_back("num_states must be positive");
  if (num_actions <= 0) out.push_back("num_actions must be positive");
  if (horizon <= 0) out.push_back("horizon must be positive");
  if (!out.empty()) return out;

  const std::size_t expected = static_cast<std::size_t>(num_states) * num_actions * num_states;
  if (transition.size() != expected) {
    out.push_back("transition has " + std::to_string(transition.size()) + " entries, expected " +
                  std::to_string(expected));
  } else {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        double sum = 0.0;
        for (int n = 0; n < num_states; ++n) {
          const double p = transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + n];
          if (!(p >= 0.0 && p <= 1.0)) {
            std::ostringstream os;
            os << "transition[" << s << "][" << a << "][" << n << "] = " << p << " is outside [0,1]";
            out.push_back(os.str());
          }
          sum += p;
        }
        if (!(std::abs(sum - 1.0) <= kRowTolerance)) {
          std::ostringstream os;
          os.precision(17);
          os << "transition[" << s << "][" << a << "] sums to " << sum;
          out.push_back(os.str());
        }
      }
    }
  }
  if (initial.size() != static_cast<std::size_t>(num_states)) {
    out.push_back("initial has " + std::to_string(initial.size()) + " entries, expected " +
                  std::to_string(num_states));
  } else {
    double sum = 0.0;
    for (int s = 0; s < num_states; ++s) {
      if (!(initial[s] >= 0.0 && initial[s] <= 1.0)) {
        std::ostringstream os;
        os << "initial[" << s << "] = " << initial[s] << " is outside [0,1]";
        out.push_back(os.str());
      }
      sum += initial[s];
    }
    if (!(std::abs(sum - 1.0) <= kRowTolerance)) {
      std::ostringstream os;
      os.precision(17);
      os << "initial sums to " << sum;
      out.push_back(os.str());
    }
  }
  return out;
}

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon, std::vector<double> transition,
                       std::vector<double> initial)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      transition_(std::move(transition)),
      initial_(std::move(initial)) {
  const auto issues = violations(num_states_, num_actions_, horizon_, transition_, initial_);
  if (!issues.empty()) throw InvalidInput("invalid MDP: " + join(issues));
}

bool TabularMdp::deterministic() const {
  for (double p : transition_) {
    if (p != 0.0 && p != 1.0) return false;
  }
  return true;
}

TabularMdp TabularMdp::with_horizon(int horizon) const {
  return TabularMdp(num_states_, num_actions_, horizon, transition_, initial_);
}

TabularMdp TabularMdp::with_initial(std::vector<double> initial) const {
  return TabularMdp(num_states_, num_actions_, horizon_, transition_, std::move(initial));
}

TabularMdp TabularMdp::starting_at(int state) const {
  if (state < 0 || state >= num_states_) throw InvalidInput("start state out of range");
  std::vector<double> initial(num_states_, 0.0);
  initial[state] = 1.0;
  return with_initial(std::move(initial));
}

TabularPolicy::TabularPolicy(int num_tasks, int horizon, int num_states, int num_actions,
                             std::vector<double> probs)
    : num_tasks_(num_tasks),
      horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      probs_(std::move(probs)) {
  if (num_tasks <= 0 || horizon <= 0 || num_states <= 0 || num_actions <= 0)
    throw InvalidInput("policy dimensions must be positive");
  const std::size_t expected =
      static_cast<std::size_t>(num_tasks) * horizon * num_states * num_actions;
  if (probs_.size() != expected)
    throw InvalidInput("policy table has " + std::to_string(probs_.size()) + " entries, expected " +
                       std::to_string(expected));
}

TabularPolicy TabularPolicy::uniform(int num_tasks, int horizon, int num_states, int num_actions) {
  const std::size_t n = static_cast<std::size_t>(num_tasks) * horizon * num_states * num_actions;
  return TabularPolicy(num_tasks, horizon, num_states, num_actions,
                       std::vector<double>(n, 1.0 / num_actions));
}

void TabularPolicy::check() const {
  for (int k = 0; k < num_tasks_; ++k) {
    for (int t = 0; t < horizon_; ++t) {
      for (int s = 0; s < num_states_; ++s) {
        const double* r = row(k, t, s);
        double sum = 0.0;
        for (int a = 0; a < num_actions_; ++a) {
          if (r[a] < 0.0) {
            throw InvalidInput("policy[" + std::to_string(k) + "][" + std::to_string(t) + "][" +
                               std::to_string(s) + "] has a negative entry");
          }
          sum += r[a];
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
          throw InvalidInput("policy[" + std::to_string(k) + "][" + std::to_string(t) + "][" +
                             std::to_string(s) + "] does not sum to 1");
        }
      }
    }
  }
}

void check_trajectory(const TabularMdp& mdp, const Trajectory& traj) {
  if (static_cast<int>(traj.steps.size()) != mdp.horizon())
    throw InvalidInput("trajectory length " + std::to_string(traj.steps.size()) +
                       " does not match horizon " + std::to_string(mdp.horizon()));
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& step = traj.steps[t];
    if (step.state < 0 || step.state >= mdp.num_states())
      throw InvalidInput("trajectory state out of range at t=" + std::to_string(t));
    if (step.action < 0 || step.action >= mdp.num_actions())
      throw InvalidInput("trajectory action out of range at t=" + std::to_string(t));
  }
}

void check_transition(const TabularMdp& mdp, const Transition& tr) {
  if (tr.state < 0 || tr.state >= mdp.num_states() || tr.next_state < 0 ||
      tr.next_state >= mdp.num_states())
    throw InvalidInput("transition state out of range");
  if (tr.action < 0 || tr.action >= mdp.num_actions()) throw InvalidInput("transition action out of range");
  if (tr.time_step < 0 || tr.time_step >= mdp.horizon())
    throw InvalidInput("transition time_step " + std::to_string(tr.time_step) + " outside [0, " +
                       std::to_string(mdp.horizon()) + ")");
}

double trajectory_log_likelihood(const TabularMdp& mdp, const TabularPolicy& policy, int task,
                                 const Trajectory& traj) {
  check_trajectory(mdp, traj);
  if (task < 0 || (policy.num_tasks() > 1 && task >= policy.num_tasks()))
    throw InvalidInput("task index out of range");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double total = std::log(mdp.initial(traj.steps[0].state));
  const int horizon = mdp.horizon();
  for (int t = 0; t < horizon; ++t) {
    const auto& step = traj.steps[t];
    total += std::log(policy.prob(task, t, step.state, step.action));
    if (t + 1 < horizon) total += std::log(mdp.p(step.state, step.action, traj.steps[t + 1].state));
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

double dynamics_log_likelihood(const TabularMdp& mdp, const Trajectory& traj) {
  double total = std::log(mdp.initial(traj.steps[0].state));
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    total += std::log(mdp.p(traj.steps[t].state, traj.steps[t].action, traj.steps[t + 1].state));
  }
  return total;
}

}  // namespace hipi
