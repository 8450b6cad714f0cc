#pragma once

#include <functional>
#include <vector>

#include "hitl/core/learner.hpp"

namespace hitl {

/// Probe agent: replays a fixed action sequence (repeating the last action once
/// exhausted) or follows a fixed state -> action policy. Rewards are ignored.
class ScriptedAgent final : public Learner {
 public:
  using Policy = std::function<ActionId(StateId)>;

  static ScriptedAgent from_sequence(std::vector<ActionId> actions) {
    if (actions.empty()) throw ConfigurationError("scripted agent: empty action sequence");
    return ScriptedAgent(std::move(actions), nullptr);
  }

  static ScriptedAgent from_policy(Policy policy) {
    if (!policy) throw ConfigurationError("scripted agent: empty policy");
    return ScriptedAgent({}, std::move(policy));
  }

  /// Table policy, e.g. the greedy actions of a value table.
  static ScriptedAgent from_table(std::vector<ActionId> table) {
    if (table.empty()) throw ConfigurationError("scripted agent: empty policy table");
    return from_policy([t = std::move(table)](StateId s) { return t.at(s); });
  }

  ActionId act(const Observation& obs, double) override {
    if (policy_) return policy_(obs.state);
    const ActionId a = sequence_[std::min(next_, sequence_.size() - 1)];
    ++next_;
    return a;
  }

  void end_episode(const Observation&, double, bool) override {}

 private:
  ScriptedAgent(std::vector<ActionId> seq, Policy policy) : sequence_(std::move(seq)), policy_(std::move(policy)) {}

  std::vector<ActionId> sequence_;
  Policy policy_;
  std::size_t next_ = 0;
};

}  // namespace hitl
