#pragma once

#include <algorithm>

#include "hitl/mdp/mdp.hpp"

namespace hitl {

struct RandomMdpOptions {
  std::size_t n_states = 5;
  std::size_t n_actions = 3;
  double gamma = 0.9;
  double reward_lo = -1.0;
  double reward_hi = 1.0;
  /// Each transition row puts mass on at most this many successors.
  std::size_t max_successors = 3;
  /// Number of absorbing terminal states (taken from the highest ids).
  std::size_t n_terminal = 0;
};

/// Random tabular MDP for property tests. Start mass is uniform over the
/// non-terminal states.
inline MdpSpec random_mdp(const RandomMdpOptions& opt, Rng& rng) {
  MdpSpec mdp;
  mdp.n_states = opt.n_states;
  mdp.n_actions = opt.n_actions;
  mdp.gamma = opt.gamma;
  mdp.transition.assign(opt.n_states, std::vector<std::vector<double>>(opt.n_actions, std::vector<double>(opt.n_states, 0.0)));
  mdp.reward.assign(opt.n_states, std::vector<double>(opt.n_actions, 0.0));
  const std::size_t first_terminal = opt.n_states - std::min(opt.n_terminal, opt.n_states - 1);
  for (std::size_t s = first_terminal; s < opt.n_states; ++s) mdp.terminal.insert(static_cast<StateId>(s));

  for (std::size_t s = 0; s < opt.n_states; ++s) {
    for (std::size_t a = 0; a < opt.n_actions; ++a) {
      auto& row = mdp.transition[s][a];
      if (mdp.is_terminal(static_cast<StateId>(s))) {
        row[s] = 1.0;
        continue;
      }
      mdp.reward[s][a] = rng.uniform(opt.reward_lo, opt.reward_hi);
      const std::size_t k = 1 + rng.index(std::max<std::size_t>(1, std::min(opt.max_successors, opt.n_states)));
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = 0.05 + rng.uniform();
        row[rng.index(opt.n_states)] += w;
        total += w;
      }
      for (double& p : row) p /= total;
    }
  }
  mdp.start.assign(opt.n_states, 0.0);
  for (std::size_t s = 0; s < first_terminal; ++s) mdp.start[s] = 1.0 / static_cast<double>(first_terminal);
  return mdp;
}

}  // namespace hitl
