#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hitl/core/rng.hpp"
#include "hitl/core/types.hpp"

namespace hitl {

/// Tabular MDP (S, A, T, R, gamma) with a start distribution and absorbing
/// terminal states. Rewards are state-action, R(s, a).
struct MdpSpec {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<std::vector<std::vector<double>>> transition;  // [s][a][s']
  std::vector<std::vector<double>> reward;                   // [s][a]
  double gamma = 0.95;
  std::set<StateId> terminal;
  std::vector<double> start;  // distribution over states

  bool is_terminal(StateId s) const { return terminal.count(s) > 0; }

  /// Throws ConfigurationError naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw ConfigurationError("MdpSpec: " + what); };
    if (n_states == 0 || n_actions == 0) fail("needs at least one state and one action");
    if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
    if (transition.size() != n_states || reward.size() != n_states) fail("table sizes disagree with n_states");
    if (start.size() != n_states) fail("start distribution has wrong length");
    for (StateId t : terminal) {
      if (t < 0 || static_cast<std::size_t>(t) >= n_states) fail("terminal id out of range");
    }
    for (std::size_t s = 0; s < n_states; ++s) {
      if (transition[s].size() != n_actions || reward[s].size() != n_actions) {
        fail("row " + std::to_string(s) + " has wrong action count");
      }
      for (std::size_t a = 0; a < n_actions; ++a) {
        const auto& row = transition[s][a];
        if (row.size() != n_states) fail("transition row length mismatch at state " + std::to_string(s));
        double sum = 0.0;
        for (double p : row) {
          if (p < 0.0 || !std::isfinite(p)) fail("negative transition probability at state " + std::to_string(s));
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
          fail("transition row (" + std::to_string(s) + ", " + std::to_string(a) + ") sums to " + std::to_string(sum));
        }
        if (!std::isfinite(reward[s][a])) fail("non-finite reward");
        if (is_terminal(static_cast<StateId>(s)) && (row[s] != 1.0 || reward[s][a] != 0.0)) {
          fail("terminal state " + std::to_string(s) + " must self-loop with zero reward");
        }
      }
    }
    double start_sum = 0.0;
    for (double p : start) {
      if (p < 0.0) fail("negative start probability");
      start_sum += p;
    }
    if (std::abs(start_sum - 1.0) > 1e-9) fail("start distribution does not sum to 1");
  }
};

struct TransitionSample {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool done = false;

  friend bool operator==(const TransitionSample&, const TransitionSample&) = default;
};

/// Draws s' ~ T(s, a, .) with reward R(s, a). Stepping a terminal state is a usage error.
inline TransitionSample sample_step(const MdpSpec& mdp, StateId s, ActionId a, Rng& rng) {
  if (s < 0 || static_cast<std::size_t>(s) >= mdp.n_states) throw UsageError("sample_step: state out of range");
  if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions) throw UsageError("sample_step: action out of range");
  if (mdp.is_terminal(s)) throw UsageError("sample_step: state " + std::to_string(s) + " is terminal");
  const auto next = static_cast<StateId>(rng.categorical(mdp.transition[s][a]));
  return {s, a, mdp.reward[s][a], next, mdp.is_terminal(next)};
}

inline StateId sample_start(const MdpSpec& mdp, Rng& rng) {
  return static_cast<StateId>(rng.categorical(mdp.start));
}

/// sum_t gamma^t r_t
inline double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

}  // namespace hitl
