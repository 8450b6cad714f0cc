#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hitl/mdp/mdp.hpp"

namespace hitl {

/// Per-state allowed actions, [s][a].
using ActionMask = std::vector<std::vector<bool>>;

struct ValueTable {
  std::vector<double> v;               // [s]
  std::vector<std::vector<double>> q;  // [s][a]
  double residual = 0.0;               // sup-norm change of the last sweep
  std::size_t sweeps = 0;

  /// Lowest-id action attaining the maximum of q[s] (restricted to `allowed` if given).
  ActionId greedy(StateId s, const std::vector<bool>* allowed = nullptr) const {
    ActionId best = kNoAction;
    for (std::size_t a = 0; a < q[s].size(); ++a) {
      if (allowed && !(*allowed)[a]) continue;
      if (best == kNoAction || q[s][a] > q[s][best]) best = static_cast<ActionId>(a);
    }
    return best;
  }
};

struct ValueIterationOptions {
  double tol = 1e-8;
  std::size_t max_sweeps = 100000;
  /// Called after every sweep with (sweep index, residual).
  std::function<void(std::size_t, double)> on_sweep;
};

namespace detail {

inline ValueTable solve(const MdpSpec& mdp, const ActionMask* mask, const ValueIterationOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigurationError("value_iteration: tol must be positive");
  const std::size_t n = mdp.n_states;
  const std::size_t m = mdp.n_actions;
  if (mask) {
    if (mask->size() != n) throw ConfigurationError("value_iteration: mask has wrong state count");
    for (std::size_t s = 0; s < n; ++s) {
      if ((*mask)[s].size() != m) throw ConfigurationError("value_iteration: mask row has wrong action count");
      if (std::none_of((*mask)[s].begin(), (*mask)[s].end(), [](bool b) { return b; })) {
        throw ConfigurationError("value_iteration: state " + std::to_string(s) + " has no allowed action");
      }
    }
  }

  ValueTable out;
  out.v.assign(n, 0.0);
  out.q.assign(n, std::vector<double>(m, 0.0));
  std::vector<double> next(n, 0.0);

  for (std::size_t sweep = 1;; ++sweep) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m; ++a) {
        const auto& row = mdp.transition[s][a];
        double expected = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          if (row[t] != 0.0) expected += row[t] * out.v[t];
        }
        const double qa = mdp.reward[s][a] + mdp.gamma * expected;
        out.q[s][a] = qa;
        if ((!mask || (*mask)[s][a]) && qa > best) best = qa;
      }
      next[s] = best;
      residual = std::max(residual, std::abs(best - out.v[s]));
    }
    out.v.swap(next);
    out.residual = residual;
    out.sweeps = sweep;
    if (opts.on_sweep) opts.on_sweep(sweep, residual);
    if (residual < opts.tol) return out;
    if (sweep >= opts.max_sweeps) {
      throw ConfigurationError("value_iteration: no convergence after " + std::to_string(sweep) +
                               " sweeps (residual " + std::to_string(residual) + "); check gamma");
    }
  }
}

}  // namespace detail

/// Synchronous value iteration to a sup-norm residual below `opts.tol`.
/// Returns v with v[s] = max_a q[s][a].
inline ValueTable value_iteration(const MdpSpec& mdp, const ValueIterationOptions& opts = {}) {
  return detail::solve(mdp, nullptr, opts);
}

/// Value iteration of the pruned Bellman equation: the max in each state runs
/// over the allowed actions only. q is still reported for every action.
inline ValueTable value_iteration(const MdpSpec& mdp, const ActionMask& mask, const ValueIterationOptions& opts = {}) {
  return detail::solve(mdp, &mask, opts);
}

}  // namespace hitl
