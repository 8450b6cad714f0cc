#pragma once

#include <set>
#include <string>
#include <utility>

#include <spdlog/spdlog.h>

#include "hitl/protocols/protocol.hpp"

namespace hitl {

struct PruneConfig {
  /// Delta: true when (state, action) must not reach the environment.
  PrunePredicate delta;
  /// Reward sent to the agent with its own state when a proposal is blocked.
  double r_bad = -200.0;
  /// Blocked proposals tolerated per decision before the forced fallback.
  int max_requeries = 100;
  /// Remember blocked (state id, action) pairs and stop asking about them.
  bool memoize = false;
};

/// Action pruning through the self-loop trick.
///
/// A pruned proposal never reaches the environment: the agent is handed back
/// its current state with reward r_bad and asked again, with nothing telling
/// it that a block happened. If the agent keeps proposing pruned actions past
/// `max_requeries`, the lowest-id allowed action is executed instead and the
/// step is reported as forced.
class PruneActions final : public Protocol {
 public:
  PruneActions(std::unique_ptr<Learner> inner, PruneConfig config, std::size_t n_actions)
      : Protocol(std::move(inner)), config_(std::move(config)), n_actions_(n_actions) {
    if (!config_.delta) throw ConfigurationError("pruning without a predicate");
    if (config_.max_requeries < 0) throw ConfigurationError("pruning: negative re-query budget");
  }

  ActionId act(const Observation& obs, double reward) override {
    ActionId a = inner().act(obs, reward);
    for (int requeries = 0; pruned(obs, a); ++requeries) {
      if (requeries == config_.max_requeries) {
        const ActionId fallback = first_allowed(obs);
        spdlog::warn("pruning: agent exhausted {} re-queries in state {}; forcing action {} instead of {}",
                     config_.max_requeries, obs.state, fallback, a);
        if (observer_) observer_->on_forced(obs, a, fallback);
        ++forced_;
        return fallback;
      }
      if (observer_) observer_->on_blocked(obs, a, config_.r_bad);
      ++blocked_;
      a = inner().act(obs, config_.r_bad);
    }
    return a;
  }

  std::size_t blocked_count() const { return blocked_; }
  std::size_t forced_count() const { return forced_; }
  const std::set<std::pair<StateId, ActionId>>& remembered() const { return table_; }

 private:
  bool pruned(const Observation& obs, ActionId a) {
    if (config_.memoize && table_.count({obs.state, a})) return true;
    const bool block = config_.delta(obs, a);
    if (block && config_.memoize) table_.emplace(obs.state, a);
    return block;
  }

  ActionId first_allowed(const Observation& obs) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      if (!pruned(obs, static_cast<ActionId>(a))) return static_cast<ActionId>(a);
    }
    throw ConfigurationError("pruning predicate rejects every action in state " + std::to_string(obs.state));
  }

  PruneConfig config_;
  std::size_t n_actions_;
  std::set<std::pair<StateId, ActionId>> table_;
  std::size_t blocked_ = 0;
  std::size_t forced_ = 0;
};

}  // namespace hitl
