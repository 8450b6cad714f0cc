#include <gtest/gtest.h>

#include "checks.hpp"

namespace hitl {
namespace {

/// Scripted learner that remembers every (state, reward) it is shown.
class Probe final : public Learner {
 public:
  explicit Probe(std::vector<ActionId> script) : script_(std::move(script)) {}

  ActionId act(const Observation& obs, double reward) override {
    calls.push_back({obs, reward});
    return script_[std::min(next_++, script_.size() - 1)];
  }
  void end_episode(const Observation& obs, double reward, bool terminal) override {
    ends.push_back({obs, reward});
    terminals.push_back(terminal);
  }

  struct Call {
    Observation obs;
    double reward;
  };
  std::vector<Call> calls;
  std::vector<Call> ends;
  std::vector<bool> terminals;

 private:
  std::vector<ActionId> script_;
  std::size_t next_ = 0;
};

template <class P, class... Args>
std::pair<std::unique_ptr<P>, Probe*> wrap_probe(std::vector<ActionId> script, Args&&... args) {
  auto probe = std::make_unique<Probe>(std::move(script));
  Probe* raw = probe.get();
  return {std::make_unique<P>(std::move(probe), std::forward<Args>(args)...), raw};
}

const GridSpec kGrid;

PrunePredicate lava_predicate() {
  return [](const Observation& o, ActionId a) {
    return kGrid.is_lava(kGrid.cell(lavagrid_step(kGrid, kGrid.cell(o.state), a).next_state));
  };
}

Observation at(Cell c) { return {kGrid.id(c), {}}; }

TEST(AgentControl, Passthrough) {
  auto [top, probe] = wrap_probe<AgentControl>({lava::kLeft});
  EXPECT_EQ(top->act(at({2, 2}), 0.5), lava::kLeft);
  ASSERT_EQ(probe->calls.size(), 1u);
  EXPECT_EQ(probe->calls[0].reward, 0.5);
  EXPECT_EQ(probe->calls[0].obs, at({2, 2}));
}

TEST(HumanControl, OptimalAdvisorEarnsOptimalValue) {
  const MdpSpec mdp = compile_to_mdp(kGrid);
  const ValueTable vt = value_iteration(mdp);
  HumanControl human(policy_advisor([&](const Observation& o) { return vt.greedy(o.state); }));
  LavaGridEnv env(kGrid);
  Rng rng(0);
  Observation o = env.reset(rng);
  std::vector<double> rewards;
  for (int t = 0; t < 50; ++t) {
    const StepOutcome out = env.step(human.act(o, 0.0), rng);
    rewards.push_back(out.reward);
    o = out.next;
    if (out.done) break;
  }
  EXPECT_NEAR(discounted_return(rewards, mdp.gamma), vt.v[kGrid.id(kGrid.start)], 1e-7);
}

TEST(HumanControl, ConstantAdvisor) {
  HumanControl human(policy_advisor([](const Observation&) { return lava::kDown; }));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(human.act({i, {}}, 0.0), lava::kDown);
}

TEST(HumanControl, NullAdvisorIsConfigurationError) {
  EXPECT_THROW(HumanControl(nullptr), ConfigurationError);
}

TEST(Prune, LavaProposalBouncesBack) {
  auto [top, probe] = wrap_probe<PruneActions>({lava::kRight, lava::kUp}, PruneConfig{lava_predicate(), -200.0, 100, false},
                                               lava::kNumActions);
  EXPECT_EQ(top->act(at({3, 3}), 0.0), lava::kUp);
  ASSERT_EQ(probe->calls.size(), 2u);
  EXPECT_EQ(probe->calls[1].obs, at({3, 3}));
  EXPECT_EQ(probe->calls[1].reward, -200.0);
  EXPECT_EQ(top->blocked_count(), 1u);
}

TEST(Prune, EmptyPredicateIsPassthrough) {
  PrunePredicate none = [](const Observation&, ActionId) { return false; };
  auto [pruned, p1] = wrap_probe<PruneActions>({3, 1, 2, 0}, PruneConfig{none, -200.0, 100, false}, 4u);
  auto [plain, p2] = wrap_probe<AgentControl>({3, 1, 2, 0});
  for (int i = 0; i < 6; ++i) EXPECT_EQ(pruned->act({i, {}}, i), plain->act({i, {}}, i));
  EXPECT_EQ(p1->calls.size(), p2->calls.size());
}

TEST(Prune, TaxiDropoffAwayFromDestination) {
  const EnvConfig env = EnvConfig::from_json(nlohmann::json{{"type", "taxi"}});
  const TaxiSpec spec;
  auto delta = named_predicate("taxi_dropoff", env);
  auto [top, probe] = wrap_probe<PruneActions>({taxi::kDropoff, taxi::kNorth},
                                               PruneConfig{delta, default_r_bad("taxi_dropoff"), 100, false}, 6u);
  const Observation o{taxi_encode(spec, {{5, 5}, taxi::Passenger::kInTaxi}), {}};
  EXPECT_EQ(top->act(o, -1.0), taxi::kNorth);
  ASSERT_EQ(probe->calls.size(), 2u);
  EXPECT_EQ(probe->calls[1].obs, o);
  EXPECT_EQ(probe->calls[1].reward, -0.01);
  // At the destination, and with nobody aboard, dropoff is left alone.
  EXPECT_FALSE(delta({taxi_encode(spec, {{2, 2}, taxi::Passenger::kInTaxi}), {}}, taxi::kDropoff));
  EXPECT_FALSE(delta({taxi_encode(spec, {{5, 5}, taxi::Passenger::kWaiting}), {}}, taxi::kDropoff));
}

TEST(Prune, ForcedFallbackAfterBudget) {
  auto [top, probe] = wrap_probe<PruneActions>({lava::kRight}, PruneConfig{lava_predicate(), -200.0, 3, false}, 4u);
  EXPECT_EQ(top->act(at({3, 3}), 0.0), lava::kUp);
  EXPECT_EQ(probe->calls.size(), 4u);
  EXPECT_EQ(top->forced_count(), 1u);
}

TEST(Prune, AllActionsPrunedIsConfigurationError) {
  PrunePredicate all = [](const Observation&, ActionId) { return true; };
  auto [top, probe] = wrap_probe<PruneActions>({0}, PruneConfig{all, -1.0, 2, false}, 4u);
  EXPECT_THROW(top->act({0, {}}, 0.0), ConfigurationError);
}

TEST(Prune, AgentSeesOnlyStateAndReward) {
  // Features ride along unchanged; the blocked re-query is indistinguishable
  // from an ordinary step with reward r_bad.
  const Observation o{7, {0.25, -0.5}};
  auto [top, probe] = wrap_probe<PruneActions>(
      {1, 1, 0}, PruneConfig{[](const Observation&, ActionId a) { return a == 1; }, -3.0, 100, false}, 2u);
  top->act(o, 2.0);
  ASSERT_EQ(probe->calls.size(), 3u);
  for (const auto& c : probe->calls) EXPECT_EQ(c.obs, o);
  EXPECT_EQ(probe->calls[1].reward, -3.0);
  EXPECT_EQ(probe->calls[2].reward, -3.0);
}

TEST(Prune, MemoizedPairsSkipTheAdvisor) {
  int asked = 0;
  PrunePredicate counting = [&](const Observation&, ActionId a) {
    ++asked;
    return a == 0;
  };
  auto [top, probe] = wrap_probe<PruneActions>({0, 1, 0, 1}, PruneConfig{counting, -1.0, 100, true}, 2u);
  EXPECT_EQ(top->act({4, {}}, 0.0), 1);
  EXPECT_EQ(asked, 2);
  EXPECT_EQ(top->act({4, {}}, 0.0), 1);
  EXPECT_EQ(asked, 3);  // the remembered block on action 0 is not asked again
  EXPECT_EQ(top->blocked_count(), 2u);
  EXPECT_EQ(top->remembered().count({4, 0}), 1u);
}

TEST(Prune, RandomMdpsNeverExecutePrunedPairs) {
  const auto audit = checks::prune_random_mdps(200, 77);
  EXPECT_EQ(audit.violations, 0u);
  EXPECT_GT(audit.blocked, 0u);
}

TEST(Shaping, ZeroPotentialIsPassthrough) {
  auto [shaped, p1] = wrap_probe<ManipulateReward>({0, 1, 2},
                                                   ShapingSpec::potential([](StateId) { return 0.0; }, 0.9));
  for (int i = 0; i < 5; ++i) shaped->act({i, {}}, 0.5 * i);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(p1->calls[i].reward, 0.5 * i);
}

TEST(Shaping, PotentialArithmetic) {
  const ShapingSpec spec = ShapingSpec::potential([](StateId s) { return s == 0 ? 1.0 : 2.0; }, 0.9);
  EXPECT_DOUBLE_EQ(spec.shaping(0, 0, 0, 1, 1), 0.8);
}

TEST(Shaping, DeliveredRewardAddsShaping) {
  auto [shaped, probe] = wrap_probe<ManipulateReward>({0}, ShapingSpec::potential([](StateId s) { return 1.0 * s; }, 0.9));
  shaped->act({0, {}}, 0.0);
  shaped->act({2, {}}, 1.0);
  shaped->end_episode({1, {}}, -1.0, true);
  EXPECT_EQ(probe->calls[0].reward, 0.0);
  EXPECT_DOUBLE_EQ(probe->calls[1].reward, 1.0 + 0.9 * 2 - 0);
  EXPECT_DOUBLE_EQ(probe->ends[0].reward, -1.0 + 0.9 * 1 - 2);
}

TEST(Shaping, DynamicClockMustAdvance) {
  const ShapingSpec spec = ShapingSpec::dynamic([](StateId s, long t) { return double(s + t); }, 0.9);
  EXPECT_THROW(spec.shaping(0, 0, 5, 1, 5), std::logic_error);
  EXPECT_DOUBLE_EQ(spec.shaping(0, 0, 5, 1, 6), 0.9 * 7 - 5);
}

TEST(Shaping, AdviceFormUsesBestNextAction) {
  const ShapingSpec spec =
      ShapingSpec::advice([](StateId s, ActionId a) { return s == 1 ? (a == 1 ? 4.0 : 1.0) : 0.5; }, 2, 0.5);
  EXPECT_DOUBLE_EQ(spec.shaping(0, 0, 0, 1, 1), 0.5 * 4.0 - 0.5);
}

TEST(Shaping, InteractiveAdvisorSetsReward) {
  auto adv = std::make_shared<ScriptedAdvisor>([](const AdviceQuery& q) {
    AdviceResponse r;
    r.reward = *q.reward * 10;
    return r;
  });
  auto [shaped, probe] = wrap_probe<ManipulateReward>({0}, adv);
  shaped->act({0, {}}, 1.0);
  shaped->act({1, {}}, 1.0);
  EXPECT_EQ(probe->calls[0].reward, 1.0);
  EXPECT_EQ(probe->calls[1].reward, 10.0);
}

TEST(Shaping, ShapedOptimalQIsOffsetByPotential) {
  const auto st = checks::shaping_invariance(10, 5);
  EXPECT_LT(st.max_offset_error, 1e-6);
  EXPECT_EQ(st.greedy_mismatches, 0u);
  EXPECT_GT(st.compared_states, 0u);
}

TEST(Shaping, WiewioraEquivalence) {
  const auto st = checks::wiewiora(2000, 3);
  EXPECT_EQ(st.first_divergence, 0u);
  EXPECT_LT(st.max_offset_error, 1e-9);
}

TEST(StateMap, IdentityIsPassthrough) {
  auto [mapped, probe] = wrap_probe<ManipulateState>({2}, [](const Observation& o) { return o.state; }, std::size_t{25});
  EXPECT_EQ(mapped->act(at({3, 4}), 1.0), 2);
  EXPECT_EQ(probe->calls[0].obs, at({3, 4}));
}

TEST(StateMap, CollapseYStaysInRange) {
  auto [mapped, probe] = wrap_probe<ManipulateState>(
      {0}, [](const Observation& o) { return static_cast<StateId>(kGrid.cell(o.state).x - 1); }, std::size_t{5});
  for (StateId s = 0; s < 25; ++s) mapped->act({s, {}}, 0.0);
  for (const auto& c : probe->calls) {
    EXPECT_GE(c.obs.state, 0);
    EXPECT_LT(c.obs.state, 5);
  }
}

TEST(StateMap, OutOfRangeIsConfigurationError) {
  auto [mapped, probe] = wrap_probe<ManipulateState>({0}, [](const Observation&) { return StateId{9}; }, std::size_t{5});
  EXPECT_THROW(mapped->act({0, {}}, 0.0), ConfigurationError);
}

TEST(StateMap, MergingEquivalentStatesKeepsPolicy) {
  // Both lava cells are absorbing with the same reward, so reporting one as
  // the other is an exact aggregation; learning must be unaffected.
  const MdpSpec mdp = compile_to_mdp(kGrid);
  const StateId keep = kGrid.id({4, 3});
  const StateId drop = kGrid.id({4, 2});
  auto run = [&](bool merge) {
    QLearningParams qp;
    qp.init = 1.0;
    auto agent = std::make_unique<QLearner>(25, 4, qp, 9);
    const QLearner* q = agent.get();
    ManipulateState top(std::move(agent), [&](const Observation& o) { return merge && o.state == drop ? keep : o.state; },
                        25);
    LavaGridEnv env(kGrid);
    Rng rng(4);
    for (int e = 0; e < 2000; ++e) {
      Observation o = env.reset(rng);
      double r = 0.0;
      bool done = false;
      for (int t = 0; t < 100 && !done; ++t) {
        const StepOutcome out = env.step(top.act(o, r), rng);
        o = out.next;
        r = out.reward;
        done = out.done;
      }
      top.end_episode(o, r, done);
    }
    std::vector<ActionId> greedy;
    for (StateId s = 0; s < 25; ++s) greedy.push_back(mdp.is_terminal(s) ? kNoAction : q->greedy(s));
    return greedy;
  };
  EXPECT_EQ(run(false), run(true));
}

std::shared_ptr<Advisor> constant_readiness(bool ready) {
  return std::make_shared<ScriptedAdvisor>([ready](const AdviceQuery&) {
    AdviceResponse r;
    r.ready = ready;
    return r;
  });
}

TEST(Simulation, ReadyAtOnceSimulatesNothing) {
  auto [sim, probe] =
      wrap_probe<TrainInSimulation>({1, 2}, compile_to_mdp(kGrid), constant_readiness(true), std::uint64_t{3});
  EXPECT_EQ(sim->act(at({1, 3}), 0.0), 1);
  EXPECT_EQ(sim->simulated_steps(), 0u);
  EXPECT_EQ(probe->calls.size(), 1u);
}

TEST(Simulation, FirstHistoryEntryIsFirstSimulatedCall) {
  int asked = 0;
  auto readiness = std::make_shared<ScriptedAdvisor>([&](const AdviceQuery&) {
    AdviceResponse r;
    r.ready = ++asked > 4;
    return r;
  });
  auto [sim, probe] = wrap_probe<TrainInSimulation>({lava::kDown, lava::kRight}, compile_to_mdp(kGrid), readiness,
                                                    std::uint64_t{3});
  sim->act(at({1, 3}), 0.5);
  ASSERT_GT(sim->simulated_steps(), 0u);
  const auto& first = sim->history()[0];
  EXPECT_EQ(first.state, probe->calls[0].obs.state);
  EXPECT_EQ(first.reward, probe->calls[0].reward);
  EXPECT_EQ(first.action, lava::kDown);
  EXPECT_EQ(first, (SimHistory::Entry{kGrid.id({1, 3}), 0.5, lava::kDown}));
}

TEST(Simulation, PretrainedAgentAvoidsLava) {
  QLearningParams qp;
  qp.alpha = 0.5;
  qp.epsilon = 0.0;
  qp.init = 1.0;
  TrainInSimulation sim(std::make_unique<QLearner>(25, 4, qp, 1), compile_to_mdp(kGrid), mean_return_readiness(20, 1.0),
                        2);
  LavaGridEnv env(kGrid);
  Rng rng(0);
  int catastrophes = 0;
  for (int e = 0; e < 50; ++e) {
    Observation o = env.reset(rng);
    double r = 0.0;
    bool done = false;
    for (int t = 0; t < 100 && !done; ++t) {
      const StepOutcome out = env.step(sim.act(o, r), rng);
      catastrophes += out.catastrophe;
      o = out.next;
      r = out.reward;
      done = out.done;
    }
    sim.end_episode(o, r, done);
  }
  EXPECT_GT(sim.simulated_steps(), 0u);
  EXPECT_EQ(catastrophes, 0);
}

TEST(Simulation, SimulatorWithoutTheRealStateFails) {
  MdpSpec tiny;
  tiny.n_states = 2;
  tiny.n_actions = 4;
  tiny.transition.assign(2, std::vector<std::vector<double>>(4, {1.0, 0.0}));
  tiny.reward.assign(2, std::vector<double>(4, 0.0));
  tiny.start = {1.0, 0.0};
  auto [sim, probe] = wrap_probe<TrainInSimulation>({0}, tiny, constant_readiness(false), std::uint64_t{1});
  try {
    sim->act({12, {}}, 0.0);
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.state(), 12);
  }
}

TEST(Simulation, BudgetExhaustionFails) {
  SimulationConfig cfg;
  cfg.max_total_steps = 100;
  auto [sim, probe] = wrap_probe<TrainInSimulation>({lava::kLeft}, compile_to_mdp(kGrid), constant_readiness(false),
                                                    std::uint64_t{1}, cfg);
  EXPECT_THROW(sim->act(at({1, 3}), 0.0), SimulationError);
}

TEST(BetaQ, AllowedSetExamples) {
  const std::vector<double> row{1.0, 0.7, 0.2};
  EXPECT_EQ(beta_q_allowed_set(row, 0.2), (std::vector<ActionId>{0, 1}));
  const std::vector<double> tie{3.0, 1.0, 3.0};
  EXPECT_EQ(beta_q_allowed_set(tie, 0.0), (std::vector<ActionId>{0, 2}));
  EXPECT_THROW(beta_q_allowed_set(row, -1.0), ConfigurationError);
}

TEST(BetaQ, RandomMdpsKeepOptimalAndBoundedActions) {
  for (double beta : {0.05, 0.1, 0.5}) {
    const auto st = checks::beta_q_bound(50, beta, 12);
    EXPECT_EQ(st.optimal_pruned, 0u) << beta;
    EXPECT_EQ(st.bound_violations, 0u) << beta;
    EXPECT_EQ(st.executed_violations, 0u) << beta;
  }
}

TEST(BetaQ, HugeBetaPrunesNothing) {
  auto advice = std::make_shared<BetaQAdvice>(BetaQAdvice{{{0.0, -5.0, 3.0}}, 100.0});
  auto top = make_beta_q_prune(std::make_unique<Probe>(std::vector<ActionId>{1}), advice);
  EXPECT_EQ(top->act({0, {}}, 0.0), 1);
  EXPECT_EQ(top->blocked_count(), 0u);
}

TEST(BetaQ, ExactAdviceOnLavaGridExecutesOnlyOptimalActions) {
  const MdpSpec mdp = compile_to_mdp(kGrid);
  const ValueTable vt = value_iteration(mdp);
  auto advice = std::make_shared<BetaQAdvice>(BetaQAdvice{vt.q, 0.0});
  auto top = make_beta_q_prune(std::make_unique<QLearner>(25, 4, QLearningParams{}, 6), advice);
  LavaGridEnv env(kGrid);
  Rng rng(0);
  int steps = 0;
  for (int e = 0; e < 20; ++e) {
    Observation o = env.reset(rng);
    double r = 0.0;
    bool done = false;
    for (int t = 0; t < 100 && !done; ++t) {
      const ActionId a = top->act(o, r);
      ++steps;
      EXPECT_NEAR(vt.q[o.state][a], vt.v[o.state], 1e-9);
      const StepOutcome out = env.step(a, rng);
      o = out.next;
      r = out.reward;
      done = out.done;
    }
    top->end_episode(o, r, done);
    EXPECT_TRUE(done);
  }
  EXPECT_EQ(steps, 20 * 6);
}

}  // namespace
}  // namespace hitl
