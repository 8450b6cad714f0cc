#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "hitl/core/learner.hpp"
#include "hitl/core/rng.hpp"

namespace hitl {

struct StepOutcome {
  Observation next;
  double reward = 0.0;
  bool done = false;
  /// The executed transition carried the environment's catastrophe reward.
  bool catastrophe = false;
};

/// Stateful stepper the run loop drives. One instance per run; not thread-safe.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  /// Size of the tabular state-id space agents see.
  virtual std::size_t n_states() const = 0;
  virtual std::size_t n_actions() const = 0;
  virtual Observation reset(Rng& rng) = 0;
  virtual StepOutcome step(ActionId action, Rng& rng) = 0;
  /// Current state rendered for the operator console.
  virtual nlohmann::json frame() const = 0;
  /// Largest per-step reward the environment can emit (optimistic agents use it).
  virtual double max_reward() const = 0;
};

}  // namespace hitl
