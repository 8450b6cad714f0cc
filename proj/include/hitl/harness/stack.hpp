#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hitl/agents/q_learning.hpp"
#include "hitl/agents/rmax.hpp"
#include "hitl/agents/scripted.hpp"
#include "hitl/blocker/blocker.hpp"
#include "hitl/harness/config.hpp"
#include "hitl/mdp/value_iteration.hpp"
#include "hitl/protocols/beta_q.hpp"
#include "hitl/protocols/reward.hpp"
#include "hitl/protocols/simulation.hpp"
#include "hitl/protocols/state_map.hpp"

namespace hitl {

/// Random-stream ids derived from the run seed.
namespace stream {
inline constexpr std::uint64_t kEnv = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kProtocol = 16;  // + position in the stack
}  // namespace stream

/// Everything a stack needs from the run that builds it.
struct StackContext {
  const EnvConfig& env_config;
  const Environment& env;
  double gamma = 0.95;
  std::uint64_t seed = 0;
  /// Network advisor for "remote" entries; null when none is attached.
  std::shared_ptr<Advisor> remote;
  /// Applied to every advisor the stack consults (logging, replay).
  std::function<std::shared_ptr<Advisor>(std::shared_ptr<Advisor>)> wrap;
  StepObserver* observer = nullptr;
};

struct BuiltStack {
  std::unique_ptr<Learner> top;
  /// Non-owning, outermost first.
  std::vector<Protocol*> protocols;
  std::vector<PruneActions*> pruners;
  CatastropheBlocker* blocker = nullptr;
  TrainInSimulation* simulation = nullptr;
  /// Pruning predicates with the raw (unlogged) advisor, for audits.
  std::vector<PrunePredicate> audit_predicates;
  std::size_t agent_states = 0;
};

/// Named predicates over environment states. Keyed by env type.
inline PrunePredicate named_predicate(const std::string& name, const EnvConfig& env) {
  if (name == "none") return [](const Observation&, ActionId) { return false; };
  if (name == "lava") {
    if (env.type != "lavagrid") throw ConfigurationError("predicate 'lava' needs a lavagrid env");
    return [g = env.grid()](const Observation& obs, ActionId a) {
      const Cell c = g.cell(obs.state);
      if (g.is_terminal(c)) return false;
      return g.is_lava(g.cell(lavagrid_step(g, c, a).next_state));
    };
  }
  if (name == "taxi_dropoff") {
    if (env.type != "taxi") throw ConfigurationError("predicate 'taxi_dropoff' needs a taxi env");
    return [t = env.taxi()](const Observation& obs, ActionId a) {
      if (a != taxi::kDropoff) return false;
      const TaxiState st = taxi_decode(t, obs.state);
      return st.passenger == taxi::Passenger::kInTaxi && !(st.taxi == t.passenger_dest);
    };
  }
  if (name == "speed_limit") {
    if (env.type != "catcher") throw ConfigurationError("predicate 'speed_limit' needs a catcher env");
    return [p = env.catcher()](const Observation& obs, ActionId a) {
      if (obs.features.size() < 2) throw UsageError("speed_limit predicate needs catcher features");
      return exceeds_speed_limit(p, obs.features[1], a);
    };
  }
  throw ConfigurationError("unknown predicate '" + name + "'");
}

/// Penalty paired with each named predicate when the config sets none.
inline double default_r_bad(const std::string& predicate) { return predicate == "taxi_dropoff" ? -0.01 : -200.0; }

namespace detail {

inline const ValueTable& oracle(const StackContext& ctx, std::shared_ptr<ValueTable>& cache) {
  if (!cache) cache = std::make_shared<ValueTable>(value_iteration(compile_env(ctx.env_config, ctx.gamma)));
  return *cache;
}

inline std::vector<ActionId> greedy_table(const ValueTable& vt) {
  std::vector<ActionId> t(vt.v.size());
  for (std::size_t s = 0; s < t.size(); ++s) t[s] = vt.greedy(static_cast<StateId>(s));
  return t;
}

inline std::shared_ptr<Advisor> use(const StackContext& ctx, std::shared_ptr<Advisor> adv) {
  return ctx.wrap ? ctx.wrap(std::move(adv)) : adv;
}

inline std::shared_ptr<Advisor> remote(const StackContext& ctx, const std::string& where) {
  if (!ctx.remote) throw ConfigurationError(where + ": \"remote\" advisor requested but no session is attached");
  return ctx.remote;
}

/// phi over states: "zero", "optimal_value" or an explicit array, times "scale".
inline std::function<double(StateId)> potential(const nlohmann::json& p, const StackContext& ctx,
                                               std::shared_ptr<ValueTable>& cache) {
  const double scale = p.value("scale", 1.0);
  const auto& phi = p.contains("phi") ? p.at("phi") : nlohmann::json("zero");
  if (phi.is_array()) {
    auto table = phi.get<std::vector<double>>();
    if (table.size() != ctx.env.n_states()) throw ConfigurationError("shape: phi table size differs from the state count");
    return [table, scale](StateId s) { return scale * table.at(s); };
  }
  const std::string name = phi.get<std::string>();
  if (name == "zero") return [](StateId) { return 0.0; };
  if (name == "optimal_value") {
    auto v = oracle(ctx, cache).v;
    return [v, scale](StateId s) { return scale * v.at(s); };
  }
  throw ConfigurationError("shape: unknown potential '" + name + "'");
}

}  // namespace detail

/// Builds the learning agent described by `agent` for `n_states` visible states.
inline std::unique_ptr<Learner> make_agent(const nlohmann::json& agent, std::size_t n_states, const StackContext& ctx) {
  const std::string type = agent.value("type", "qlearning");
  const std::size_t n_actions = ctx.env.n_actions();
  const std::uint64_t seed = mix_seed(ctx.seed, stream::kAgent);
  if (type == "qlearning") {
    QLearningParams p;
    p.alpha = agent.value("alpha", p.alpha);
    p.gamma = agent.value("gamma", ctx.gamma);
    p.epsilon = agent.value("epsilon", p.epsilon);
    p.init = agent.value("init", p.init);
    return std::make_unique<QLearner>(n_states, n_actions, p, seed);
  }
  if (type == "rmax") {
    RMaxParams p;
    p.known_threshold = agent.value("known_threshold", p.known_threshold);
    p.horizon = agent.value("horizon", p.horizon);
    p.gamma = agent.value("gamma", ctx.gamma);
    p.rmax = agent.value("rmax", ctx.env.max_reward());
    return std::make_unique<RMaxAgent>(n_states, n_actions, p);
  }
  if (type == "random") {
    auto rng = std::make_shared<Rng>(seed);
    return std::make_unique<ScriptedAgent>(
        ScriptedAgent::from_policy([rng, n_actions](StateId) { return static_cast<ActionId>(rng->index(n_actions)); }));
  }
  if (type == "scripted") {
    if (agent.contains("sequence")) {
      return std::make_unique<ScriptedAgent>(ScriptedAgent::from_sequence(agent.at("sequence").get<std::vector<ActionId>>()));
    }
    if (agent.value("policy", "") == "optimal") {
      std::shared_ptr<ValueTable> cache;
      return std::make_unique<ScriptedAgent>(ScriptedAgent::from_table(detail::greedy_table(detail::oracle(ctx, cache))));
    }
    if (agent.contains("table")) {
      return std::make_unique<ScriptedAgent>(ScriptedAgent::from_table(agent.at("table").get<std::vector<ActionId>>()));
    }
    throw ConfigurationError("scripted agent needs \"sequence\", \"table\" or \"policy\": \"optimal\"");
  }
  throw ConfigurationError("unknown agent type '" + type + "'");
}

/// Wraps the agent in the condition's protocols. The list is outermost first.
inline BuiltStack build_stack(const ConditionConfig& cond, const nlohmann::json& agent_config, const StackContext& ctx) {
  BuiltStack out;
  const auto names = cond.protocols();
  std::shared_ptr<ValueTable> vt;
  const std::size_t n_actions = ctx.env.n_actions();

  // The agent's state range is narrowed by the outermost state map, if any.
  out.agent_states = ctx.env.n_states();
  for (const auto& name : names) {
    if (name != "state_map") continue;
    const auto p = cond.params(name);
    const auto& map = p.contains("map") ? p.at("map") : nlohmann::json("identity");
    if (p.contains("agent_states")) {
      out.agent_states = p.at("agent_states").get<std::size_t>();
    } else if (map.is_array()) {
      const auto t = map.get<std::vector<StateId>>();
      out.agent_states = t.empty() ? 0 : static_cast<std::size_t>(*std::max_element(t.begin(), t.end()) + 1);
    } else if (map == "collapse_y") {
      out.agent_states = static_cast<std::size_t>(ctx.env_config.grid().width);
    }
    break;
  }

  std::unique_ptr<Learner> current =
      std::make_unique<AgentTap>(make_agent(agent_config, out.agent_states, ctx), ctx.observer);

  for (std::size_t i = names.size(); i-- > 0;) {
    const std::string& name = names[i];
    const auto p = cond.params(name);
    const std::uint64_t pseed = mix_seed(ctx.seed, stream::kProtocol + i);
    std::unique_ptr<Learner> next;
    Protocol* proto = nullptr;

    if (name == "agent") {
      auto x = std::make_unique<AgentControl>(std::move(current));
      proto = x.get();
      next = std::move(x);
    } else if (name == "human") {
      const auto advisor = p.value("advisor", nlohmann::json("optimal"));
      std::shared_ptr<Advisor> adv;
      if (advisor == "remote") {
        adv = detail::remote(ctx, "human");
      } else if (advisor == "optimal") {
        auto table = detail::greedy_table(detail::oracle(ctx, vt));
        adv = policy_advisor([table](const Observation& o) { return table.at(o.state); });
      } else if (advisor.is_object() && advisor.contains("constant")) {
        const ActionId a = advisor.at("constant").get<ActionId>();
        adv = policy_advisor([a](const Observation&) { return a; });
      } else {
        throw ConfigurationError("human: unknown advisor " + advisor.dump());
      }
      // The agent below is never consulted; it is dropped.
      current.reset();
      next = std::make_unique<HumanControl>(detail::use(ctx, adv));
    } else if (name == "prune") {
      const std::string pred = p.value("predicate", "none");
      PruneConfig cfg;
      cfg.r_bad = p.value("r_bad", default_r_bad(pred));
      cfg.max_requeries = p.value("max_requeries", cfg.max_requeries);
      cfg.memoize = p.value("memoize", false);
      std::shared_ptr<Advisor> adv;
      if (pred == "remote") {
        adv = detail::remote(ctx, "prune");
      } else {
        auto delta = named_predicate(pred, ctx.env_config);
        out.audit_predicates.push_back(delta);
        adv = predicate_advisor(std::move(delta));
      }
      cfg.delta = advisor_predicate(detail::use(ctx, adv));
      auto x = std::make_unique<PruneActions>(std::move(current), std::move(cfg), n_actions);
      out.pruners.push_back(x.get());
      proto = x.get();
      next = std::move(x);
    } else if (name == "beta_q") {
      Rng noise(pseed);
      auto advice = std::make_shared<BetaQAdvice>(BetaQAdvice::perturbed(detail::oracle(ctx, vt), p.value("beta", 0.0), noise));
      const double r_bad = p.value("r_bad", -200.0);
      out.audit_predicates.push_back(beta_q_predicate(advice));
      PruneConfig cfg{advisor_predicate(detail::use(ctx, predicate_advisor(beta_q_predicate(advice)))), r_bad,
                      p.value("max_requeries", 100), false};
      auto x = std::make_unique<PruneActions>(std::move(current), std::move(cfg), n_actions);
      out.pruners.push_back(x.get());
      proto = x.get();
      next = std::move(x);
    } else if (name == "shape") {
      const std::string mode = p.value("mode", "potential");
      std::unique_ptr<ManipulateReward> x;
      if (mode == "interactive") {
        std::shared_ptr<Advisor> adv;
        if (p.value("advisor", "remote") == "remote") {
          adv = detail::remote(ctx, "shape");
        } else {
          adv = std::make_shared<ScriptedAdvisor>([](const AdviceQuery&) { return AdviceResponse{}; });
        }
        x = std::make_unique<ManipulateReward>(std::move(current), detail::use(ctx, adv));
      } else if (mode == "potential") {
        x = std::make_unique<ManipulateReward>(std::move(current),
                                               ShapingSpec::potential(detail::potential(p, ctx, vt), ctx.gamma));
      } else if (mode == "dynamic") {
        const double decay = p.value("decay", 1.0);
        auto phi = detail::potential(p, ctx, vt);
        x = std::make_unique<ManipulateReward>(
            std::move(current),
            ShapingSpec::dynamic([phi, decay](StateId s, long t) { return phi(s) * std::pow(decay, static_cast<double>(t)); },
                                 ctx.gamma));
      } else if (mode == "advice") {
        const double scale = p.value("scale", 1.0);
        auto q = detail::oracle(ctx, vt).q;
        x = std::make_unique<ManipulateReward>(
            std::move(current),
            ShapingSpec::advice([q, scale](StateId s, ActionId a) { return scale * q.at(s).at(a); }, n_actions, ctx.gamma));
      } else {
        throw ConfigurationError("shape: unknown mode '" + mode + "'");
      }
      proto = x.get();
      next = std::move(x);
    } else if (name == "state_map") {
      const auto& map = p.contains("map") ? p.at("map") : nlohmann::json("identity");
      std::unique_ptr<ManipulateState> x;
      if (map == "remote") {
        x = std::make_unique<ManipulateState>(std::move(current), detail::use(ctx, detail::remote(ctx, "state_map")),
                                              out.agent_states);
      } else {
        ManipulateState::Map fn;
        if (map.is_array()) {
          fn = [t = map.get<std::vector<StateId>>()](const Observation& o) { return t.at(o.state); };
        } else if (map == "identity") {
          fn = [](const Observation& o) { return o.state; };
        } else if (map == "collapse_y") {
          const GridSpec g = ctx.env_config.grid();
          fn = [g](const Observation& o) { return static_cast<StateId>(g.cell(o.state).x - 1); };
        } else {
          throw ConfigurationError("state_map: unknown map " + map.dump());
        }
        x = std::make_unique<ManipulateState>(std::move(current), std::move(fn), out.agent_states);
      }
      proto = x.get();
      next = std::move(x);
    } else if (name == "simulate") {
      const auto sim_env = p.contains("simulator") ? EnvConfig::from_json(p.at("simulator")) : ctx.env_config;
      MdpSpec sim = compile_env(sim_env, ctx.gamma);
      const auto& readiness = p.contains("readiness") ? p.at("readiness") : nlohmann::json("always");
      std::shared_ptr<Advisor> adv;
      if (readiness == "remote") {
        adv = detail::remote(ctx, "simulate");
      } else if (readiness == "always") {
        adv = std::make_shared<ScriptedAdvisor>([](const AdviceQuery&) {
          AdviceResponse r;
          r.ready = true;
          return r;
        });
      } else if (readiness.is_object() && readiness.value("type", "") == "mean_return") {
        adv = mean_return_readiness(readiness.value("window", std::size_t{20}), readiness.at("threshold").get<double>());
      } else {
        throw ConfigurationError("simulate: unknown readiness " + readiness.dump());
      }
      SimulationConfig scfg;
      scfg.max_episode_steps = p.value("max_episode_steps", scfg.max_episode_steps);
      scfg.max_total_steps = p.value("max_total_steps", scfg.max_total_steps);
      auto x = std::make_unique<TrainInSimulation>(std::move(current), std::move(sim), detail::use(ctx, adv), pseed, scfg);
      out.simulation = x.get();
      proto = x.get();
      next = std::move(x);
    } else if (name == "blocker") {
      if (ctx.env_config.type != "catcher") throw ConfigurationError("blocker: features are defined for catcher only");
      BlockerConfig bc;
      bc.gate.min_samples = p.value("min_samples", bc.gate.min_samples);
      bc.gate.holdout_fraction = p.value("holdout", bc.gate.holdout_fraction);
      bc.gate.max_false_negatives = p.value("max_false_negatives", bc.gate.max_false_negatives);
      bc.train.epochs = p.value("epochs", bc.train.epochs);
      bc.train.learning_rate = p.value("learning_rate", bc.train.learning_rate);
      bc.r_bad = p.value("r_bad", bc.r_bad);
      bc.max_requeries = p.value("max_requeries", bc.max_requeries);
      bc.gate_every = p.value("gate_every", bc.gate_every);
      const std::string human = p.value("advisor", "speed_limit");
      std::shared_ptr<Advisor> adv;
      if (human == "remote") {
        adv = detail::remote(ctx, "blocker");
      } else {
        auto delta = named_predicate(human, ctx.env_config);
        out.audit_predicates.push_back(delta);
        adv = predicate_advisor(std::move(delta));
      }
      auto x = std::make_unique<CatastropheBlocker>(std::move(current), catcher_feature_fn(ctx.env_config.catcher()),
                                                    detail::use(ctx, adv), bc, n_actions, pseed);
      out.blocker = x.get();
      proto = x.get();
      next = std::move(x);
    } else {
      throw ConfigurationError("unknown protocol '" + name + "'");
    }
    if (proto) {
      proto->set_observer(ctx.observer);
      out.protocols.insert(out.protocols.begin(), proto);
    }
    current = std::move(next);
  }
  out.top = std::move(current);
  return out;
}

}  // namespace hitl
