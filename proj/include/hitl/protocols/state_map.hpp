#pragma once

#include <functional>
#include <string>

#include "hitl/protocols/protocol.hpp"

namespace hitl {

/// State manipulation: the agent sees map(s) in place of s.
class ManipulateState final : public Protocol {
 public:
  using Map = std::function<StateId(const Observation&)>;

  /// `agent_states` is the size of the state-id range the wrapped agent declares.
  ManipulateState(std::unique_ptr<Learner> inner, Map map, std::size_t agent_states)
      : Protocol(std::move(inner)), map_(std::move(map)), agent_states_(agent_states) {
    if (!map_) throw ConfigurationError("state map protocol without a map");
  }

  /// Interactive variant: each state is mapped by a state-map advisor query.
  ManipulateState(std::unique_ptr<Learner> inner, std::shared_ptr<Advisor> advisor, std::size_t agent_states)
      : ManipulateState(std::move(inner), from_advisor(std::move(advisor)), agent_states) {}

  ActionId act(const Observation& obs, double reward) override { return inner().act(mapped(obs), reward); }

  void end_episode(const Observation& obs, double reward, bool terminal) override {
    inner().end_episode(mapped(obs), reward, terminal);
  }

 private:
  static Map from_advisor(std::shared_ptr<Advisor> advisor) {
    if (!advisor) throw ConfigurationError("state map protocol without an advisor");
    return [adv = std::move(advisor)](const Observation& obs) {
      AdviceQuery q;
      q.kind = QueryKind::kStateMap;
      q.state = obs;
      return adv->respond(q).state.value_or(obs.state);
    };
  }

  Observation mapped(const Observation& obs) const {
    Observation out = obs;
    out.state = map_(obs);
    if (out.state < 0 || static_cast<std::size_t>(out.state) >= agent_states_) {
      throw ConfigurationError("state map sent state " + std::to_string(obs.state) + " to " +
                               std::to_string(out.state) + ", outside the agent's range [0, " +
                               std::to_string(agent_states_) + ")");
    }
    return out;
  }

  Map map_;
  std::size_t agent_states_;
};

}  // namespace hitl
