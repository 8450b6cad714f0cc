#pragma once

#include <algorithm>
#include <functional>
#include <optional>

#include "hitl/protocols/protocol.hpp"

namespace hitl {

/// Potential-based shaping functions.
///
///  - potential:         F(s, a, s')        = gamma * phi(s') - phi(s)
///  - dynamic-potential: F(s, t, s', t')    = gamma * phi(s', t') - phi(s, t), t' > t
///  - advice:            F(s, a, s')        = gamma * max_a' phi(s', a') - phi(s, a)
///
/// The dynamic clock counts rewards delivered by the protocol.
struct ShapingSpec {
  enum class Mode { kPotential, kDynamic, kAdvice };

  Mode mode = Mode::kPotential;
  std::function<double(StateId)> phi;
  std::function<double(StateId, long)> phi_timed;
  std::function<double(StateId, ActionId)> phi_action;
  std::size_t n_actions = 0;  // advice mode: actions to maximise over
  double gamma = 0.95;

  static ShapingSpec potential(std::function<double(StateId)> phi, double gamma) {
    ShapingSpec s;
    s.phi = std::move(phi);
    s.gamma = gamma;
    return s;
  }

  static ShapingSpec dynamic(std::function<double(StateId, long)> phi, double gamma) {
    ShapingSpec s;
    s.mode = Mode::kDynamic;
    s.phi_timed = std::move(phi);
    s.gamma = gamma;
    return s;
  }

  static ShapingSpec advice(std::function<double(StateId, ActionId)> phi, std::size_t n_actions, double gamma) {
    ShapingSpec s;
    s.mode = Mode::kAdvice;
    s.phi_action = std::move(phi);
    s.n_actions = n_actions;
    s.gamma = gamma;
    return s;
  }

  void validate() const {
    const bool ok = (mode == Mode::kPotential && phi) || (mode == Mode::kDynamic && phi_timed) ||
                    (mode == Mode::kAdvice && phi_action && n_actions > 0);
    if (!ok) throw ConfigurationError("shaping spec is missing the potential for its mode");
  }

  double shaping(StateId s, ActionId a, long t, StateId next, long t_next) const {
    switch (mode) {
      case Mode::kPotential: return gamma * phi(next) - phi(s);
      case Mode::kDynamic:
        if (t_next <= t) throw std::logic_error("dynamic shaping: clock did not advance");
        return gamma * phi_timed(next, t_next) - phi_timed(s, t);
      case Mode::kAdvice: {
        double best = phi_action(next, 0);
        for (std::size_t b = 1; b < n_actions; ++b) best = std::max(best, phi_action(next, static_cast<ActionId>(b)));
        return gamma * best - phi_action(s, a);
      }
    }
    return 0.0;
  }
};

/// Reward manipulation: the agent receives r + F(prev, a, s') for a shaping
/// spec, or whatever an interactive advisor answers for (s, r). The first
/// call of an episode has no transition and passes r through.
class ManipulateReward final : public Protocol {
 public:
  ManipulateReward(std::unique_ptr<Learner> inner, ShapingSpec spec)
      : Protocol(std::move(inner)), spec_(std::move(spec)) {
    spec_.validate();
  }

  ManipulateReward(std::unique_ptr<Learner> inner, std::shared_ptr<Advisor> advisor)
      : Protocol(std::move(inner)), advisor_(std::move(advisor)) {
    if (!advisor_) throw ConfigurationError("reward manipulation needs a shaping spec or an advisor");
  }

  ActionId act(const Observation& obs, double reward) override {
    const double delivered = transform(obs, reward);
    const ActionId a = inner().act(obs, delivered);
    prev_ = Prev{obs.state, a, clock_};
    return a;
  }

  void end_episode(const Observation& obs, double reward, bool terminal) override {
    const double delivered = transform(obs, reward);
    inner().end_episode(obs, delivered, terminal);
    prev_.reset();
  }

  long clock() const { return clock_; }

 private:
  struct Prev {
    StateId state;
    ActionId action;
    long time;
  };

  double transform(const Observation& obs, double reward) {
    const long now = ++clock_;
    if (!prev_) return reward;
    if (advisor_) {
      AdviceQuery q;
      q.kind = QueryKind::kRewardOverride;
      q.state = obs;
      q.proposed = prev_->action;
      q.reward = reward;
      return advisor_->respond(q).reward.value_or(reward);
    }
    return reward + spec_.shaping(prev_->state, prev_->action, prev_->time, obs.state, now);
  }

  ShapingSpec spec_;
  std::shared_ptr<Advisor> advisor_;
  std::optional<Prev> prev_;
  long clock_ = 0;
};

}  // namespace hitl
