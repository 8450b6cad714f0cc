#pragma once

#include <stdexcept>
#include <string>

#include "hitl/core/rng.hpp"
#include "hitl/mdp/mdp.hpp"
#include "hitl/protocols/protocol.hpp"

namespace hitl {

/// A simulator step failed; carries the simulated state it failed in.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(StateId state, const std::string& what)
      : std::runtime_error("simulation failed in state " + std::to_string(state) + ": " + what), state_(state) {}
  StateId state() const { return state_; }

 private:
  StateId state_;
};

struct SimulationConfig {
  /// A simulated episode is cut off after this many steps.
  std::size_t max_episode_steps = 200;
  /// Total simulated steps before giving up on readiness.
  std::size_t max_total_steps = 10'000'000;
};

/// Training in simulation.
///
/// On every real call the readiness advisor is shown the simulated history.
/// Until it answers ready, the agent is stepped against the simulator starting
/// from the real (state, reward); each (s, r, a) goes into the history. Once
/// ready, the pending simulated episode is closed and the agent answers the
/// real call. Readiness is asked again on every real call.
class TrainInSimulation final : public Protocol {
 public:
  TrainInSimulation(std::unique_ptr<Learner> inner, MdpSpec simulator, std::shared_ptr<Advisor> readiness,
                    std::uint64_t seed, SimulationConfig config = {})
      : Protocol(std::move(inner)),
        sim_(std::move(simulator)),
        readiness_(std::move(readiness)),
        rng_(seed),
        config_(config) {
    if (!readiness_) throw ConfigurationError("training in simulation needs a readiness advisor");
    sim_.validate();
  }

  ActionId act(const Observation& obs, double reward) override {
    if (!ready()) simulate(obs, reward);
    return inner().act(obs, reward);
  }

  const SimHistory& history() const { return history_; }
  std::size_t simulated_steps() const { return history_.size(); }

 private:
  bool ready() {
    AdviceQuery q;
    q.kind = QueryKind::kReadiness;
    q.history = &history_;
    return readiness_->respond(q).ready.value_or(false);
  }

  void simulate(const Observation& real, double real_reward) {
    if (real.state < 0 || static_cast<std::size_t>(real.state) >= sim_.n_states) {
      throw SimulationError(real.state, "real state has no counterpart in the simulator");
    }
    if (observer_) observer_->on_sim_phase(true);
    StateId s = real.state;
    double r = real_reward;
    std::size_t steps = 0;
    double ret = 0.0;
    bool open = false;
    do {
      const ActionId a = inner().act({s, {}}, r);
      history_.append(s, r, a);
      open = true;
      TransitionSample t;
      try {
        t = sample_step(sim_, s, a, rng_);
      } catch (const std::exception& e) {
        throw SimulationError(s, e.what());
      }
      ret += t.reward;
      ++steps;
      if (history_.size() >= config_.max_total_steps) {
        throw SimulationError(t.next_state, "simulation budget exhausted before readiness");
      }
      if (t.done || steps >= config_.max_episode_steps) {
        inner().end_episode({t.next_state, {}}, t.reward, t.done);
        history_.finish_episode(ret);
        open = false;
        s = real.state;
        r = 0.0;
        steps = 0;
        ret = 0.0;
      } else {
        s = t.next_state;
        r = t.reward;
      }
    } while (!ready());
    if (open) inner().end_episode({s, {}}, r, false);
    if (observer_) observer_->on_sim_phase(false);
  }

  MdpSpec sim_;
  std::shared_ptr<Advisor> readiness_;
  Rng rng_;
  SimulationConfig config_;
  SimHistory history_;
};

}  // namespace hitl
