#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <vector>

#include "hitl/core/rng.hpp"
#include "hitl/mdp/value_iteration.hpp"
#include "hitl/protocols/prune.hpp"

namespace hitl {

/// An advisor's approximate Q function, assumed within `beta` of Q* in sup-norm.
struct BetaQAdvice {
  std::vector<std::vector<double>> q_h;
  double beta = 0.0;

  /// Q* perturbed per entry by uniform noise in [-beta, beta].
  static BetaQAdvice perturbed(const ValueTable& oracle, double beta, Rng& rng) {
    BetaQAdvice out{oracle.q, beta};
    for (auto& row : out.q_h) {
      for (double& q : row) q += rng.uniform(-beta, beta);
    }
    return out;
  }
};

/// { a : q(a) >= max q - 2 beta }, ascending. Always contains the argmax.
inline std::vector<ActionId> beta_q_allowed_set(std::span<const double> q_row, double beta) {
  if (beta < 0.0) throw ConfigurationError("beta must be non-negative");
  if (q_row.empty()) return {};
  const double threshold = *std::max_element(q_row.begin(), q_row.end()) - 2.0 * beta;
  std::vector<ActionId> out;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (q_row[a] >= threshold) out.push_back(static_cast<ActionId>(a));
  }
  return out;
}

/// Delta(s, a) = [a not in the allowed set of s].
inline PrunePredicate beta_q_predicate(std::shared_ptr<const BetaQAdvice> advice) {
  if (!advice) throw ConfigurationError("beta-Q pruning without advice");
  if (advice->beta < 0.0) throw ConfigurationError("beta must be non-negative");
  auto allowed = std::make_shared<std::vector<std::vector<bool>>>();
  for (const auto& row : advice->q_h) {
    std::vector<bool> mask(row.size(), false);
    for (ActionId a : beta_q_allowed_set(row, advice->beta)) mask[a] = true;
    allowed->push_back(std::move(mask));
  }
  return [allowed](const Observation& obs, ActionId a) { return !(*allowed).at(obs.state).at(a); };
}

/// Pruning protocol driven by beta-Q advice.
inline std::unique_ptr<PruneActions> make_beta_q_prune(std::unique_ptr<Learner> inner,
                                                       std::shared_ptr<const BetaQAdvice> advice,
                                                       double r_bad = -200.0, int max_requeries = 100) {
  const std::size_t n_actions = advice ? advice->q_h.at(0).size() : 0;
  PruneConfig cfg{beta_q_predicate(std::move(advice)), r_bad, max_requeries, false};
  return std::make_unique<PruneActions>(std::move(inner), std::move(cfg), n_actions);
}

/// Allowed-action mask per state, for value iteration of the pruned Bellman equation.
inline ActionMask beta_q_mask(const BetaQAdvice& advice) {
  ActionMask mask;
  for (const auto& row : advice.q_h) {
    std::vector<bool> m(row.size(), false);
    for (ActionId a : beta_q_allowed_set(row, advice.beta)) m[a] = true;
    mask.push_back(std::move(m));
  }
  return mask;
}

}  // namespace hitl
