#pragma once

#include <memory>

#include "hitl/core/learner.hpp"
#include "hitl/protocols/advice.hpp"
#include "hitl/protocols/events.hpp"

namespace hitl {

/// A protocol program: a Learner that owns the Learner it wraps (an agent or
/// another protocol) and controls what flows between it and the environment.
class Protocol : public Learner {
 public:
  explicit Protocol(std::unique_ptr<Learner> inner) : inner_(std::move(inner)) {
    if (!inner_) throw ConfigurationError("protocol without a wrapped agent");
  }

  virtual void set_observer(StepObserver* observer) { observer_ = observer; }

  void end_episode(const Observation& obs, double reward, bool terminal) override {
    inner_->end_episode(obs, reward, terminal);
  }

 protected:
  Learner& inner() { return *inner_; }

  std::unique_ptr<Learner> inner_;
  StepObserver* observer_ = nullptr;
};

/// Agent in control: pure passthrough.
class AgentControl final : public Protocol {
 public:
  using Protocol::Protocol;

  ActionId act(const Observation& obs, double reward) override { return inner().act(obs, reward); }
};

/// Human in control: the advisor picks every action; the agent is never consulted.
class HumanControl final : public Learner {
 public:
  explicit HumanControl(std::shared_ptr<Advisor> advisor) : advisor_(std::move(advisor)) {
    if (!advisor_) throw ConfigurationError("human control without an advisor");
  }

  ActionId act(const Observation& obs, double reward) override {
    AdviceQuery q;
    q.kind = QueryKind::kActionOverride;
    q.state = obs;
    q.reward = reward;
    const AdviceResponse r = advisor_->respond(q);
    if (!r.action) throw UsageError("human control: advisor returned no action");
    return *r.action;
  }

  void end_episode(const Observation&, double, bool) override {}

 private:
  std::shared_ptr<Advisor> advisor_;
};

}  // namespace hitl
