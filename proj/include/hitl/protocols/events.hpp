#pragma once

#include <memory>

#include "hitl/core/learner.hpp"

namespace hitl {

/// Hooks the run loop uses to reconstruct what happened inside a protocol
/// stack. None of this is visible to the agent.
class StepObserver {
 public:
  virtual ~StepObserver() = default;

  /// The wrapped agent was called with (seen, reward) and answered `action`.
  virtual void on_agent_call(const Observation& /*seen*/, double /*reward*/, ActionId /*action*/) {}
  virtual void on_agent_end(const Observation& /*seen*/, double /*reward*/) {}
  /// A proposal was pruned; the agent is about to receive `reward` in a self-loop.
  virtual void on_blocked(const Observation& /*obs*/, ActionId /*proposed*/, double /*reward*/) {}
  /// The re-query budget ran out and `fallback` replaces the last proposal.
  virtual void on_forced(const Observation& /*obs*/, ActionId /*proposed*/, ActionId /*fallback*/) {}
  /// Brackets agent calls that happen against a simulator.
  virtual void on_sim_phase(bool /*active*/) {}
};

/// Innermost wrapper around the agent: forwards untouched and reports the
/// agent's experience stream.
class AgentTap final : public Learner {
 public:
  AgentTap(std::unique_ptr<Learner> agent, StepObserver* observer) : agent_(std::move(agent)), observer_(observer) {
    if (!agent_) throw ConfigurationError("agent tap without an agent");
  }

  ActionId act(const Observation& obs, double reward) override {
    const ActionId a = agent_->act(obs, reward);
    if (observer_) observer_->on_agent_call(obs, reward, a);
    return a;
  }

  void end_episode(const Observation& obs, double reward, bool terminal) override {
    agent_->end_episode(obs, reward, terminal);
    if (observer_) observer_->on_agent_end(obs, reward);
  }

 private:
  std::unique_ptr<Learner> agent_;
  StepObserver* observer_;
};

}  // namespace hitl
