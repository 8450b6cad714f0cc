#pragma once

#include <vector>

#include "hitl/core/types.hpp"

namespace hitl {

/// What the environment reveals at a step. Tabular agents read `state` only;
/// `features` carries the raw continuous state where one exists (Catcher) so
/// protocols and advisors can judge it.
struct Observation {
  StateId state = 0;
  std::vector<double> features;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// The agent interface L : (state, reward) -> action.
///
/// Protocol programs implement the same interface, so anything that accepts a
/// Learner accepts a stack of protocols around one. `end_episode` is the
/// out-of-band episode boundary: it delivers the final (state, reward) pair of
/// the episode and resets per-episode bookkeeping. `terminal` distinguishes an
/// absorbing end from a step-budget cutoff.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual ActionId act(const Observation& obs, double reward) = 0;
  virtual void end_episode(const Observation& obs, double reward, bool terminal) = 0;
};

}  // namespace hitl
