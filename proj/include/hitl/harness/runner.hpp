#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "hitl/bridge/message_log.hpp"
#include "hitl/harness/record.hpp"
#include "hitl/harness/stack.hpp"

namespace hitl {

/// What the run loop reports after every environment step.
struct StepEvent {
  const Environment& env;
  long episode = 0;
  long step = 0;
  ActionId action = kNoAction;
  const StepOutcome& outcome;
  /// Metrics of the current episode so far.
  const MetricsRow& running;
};

struct RunHooks {
  /// Advisor behind every "remote" entry of the stack.
  std::shared_ptr<Advisor> remote;
  /// When set, answers every advisor query of the stack instead.
  std::shared_ptr<Advisor> replay;
  /// Session log to share with the remote advisor; created per seed otherwise.
  std::shared_ptr<MessageLog> log;
  std::function<void(const StepEvent&)> on_step;
  std::function<void(bool)> on_sim_phase;
  std::function<void(long episode)> on_episode_start;
};

struct SeedResult {
  std::string condition;
  std::uint64_t seed = 0;
  RunRecord record;
  std::vector<MetricsRow> metrics;
  /// JSON-lines advisor traffic (empty unless message logging is on).
  std::string messages;
  std::optional<std::string> error;
  /// Post-run protocol state: blocker gate status, simulated steps, ...
  nlohmann::json info = nlohmann::json::object();
};

namespace detail {

/// Rebuilds RunRecord rows from the stack's event hooks.
class RunRecorder final : public StepObserver {
 public:
  explicit RunRecorder(std::function<void(bool)> on_phase) : on_phase_(std::move(on_phase)) {}

  void begin_decision(long episode, long step) {
    episode_ = episode;
    step_ = step;
    agent_action_.reset();
    forced_proposal_.reset();
  }

  void on_agent_call(const Observation&, double reward, ActionId action) override {
    if (in_sim_) return;
    deliver(reward);
    agent_action_ = action;
  }

  void on_agent_end(const Observation&, double reward) override {
    if (in_sim_) return;
    deliver(reward);
  }

  void on_blocked(const Observation& obs, ActionId proposed, double) override {
    if (in_sim_) return;
    StepRow row;
    row.episode = episode_;
    row.step = step_;
    row.state = obs.state;
    row.proposed = proposed;
    row.blocked = true;
    rows.push_back(row);
    pending_ = rows.size() - 1;
  }

  void on_forced(const Observation&, ActionId proposed, ActionId) override { forced_proposal_ = proposed; }

  void on_sim_phase(bool active) override {
    in_sim_ = active;
    if (on_phase_) on_phase_(active);
  }

  void executed(StateId state, ActionId action, const StepOutcome& out) {
    StepRow row;
    row.episode = episode_;
    row.step = step_;
    row.state = state;
    row.proposed = forced_proposal_ ? *forced_proposal_ : agent_action_.value_or(action);
    row.executed = action;
    row.raw_reward = out.reward;
    row.catastrophe = out.catastrophe;
    row.forced = forced_proposal_.has_value();
    rows.push_back(row);
    pending_ = rows.size() - 1;
  }

  void end_episode() { pending_.reset(); }

  RunRecord rows;

 private:
  void deliver(double reward) {
    if (pending_) rows[*pending_].delivered_reward = reward;
    pending_.reset();
  }

  std::function<void(bool)> on_phase_;
  long episode_ = 0;
  long step_ = 0;
  bool in_sim_ = false;
  std::optional<ActionId> agent_action_;
  std::optional<ActionId> forced_proposal_;
  std::optional<std::size_t> pending_;
};

inline std::string session_name(const ExperimentConfig& cfg, const std::string& condition, std::uint64_t seed) {
  return cfg.name + "/" + condition + "/" + std::to_string(seed);
}

}  // namespace detail

/// One seed of one condition. Errors are caught and recorded in the result.
inline SeedResult run_seed(const ExperimentConfig& cfg, const ConditionConfig& cond, std::uint64_t seed,
                           const RunHooks& hooks = {}) {
  SeedResult res;
  res.condition = cond.name;
  res.seed = seed;
  std::ostringstream log_text;
  detail::RunRecorder recorder(hooks.on_sim_phase);
  try {
    auto env = make_env(cfg.env);
    std::shared_ptr<MessageLog> log = hooks.log;
    if (!log && cfg.log_messages) log = std::make_shared<MessageLog>(detail::session_name(cfg, cond.name, seed), &log_text);

    StackContext ctx{cfg.env, *env, cfg.gamma, seed, hooks.remote, nullptr, &recorder};
    if (hooks.replay) {
      ctx.remote = hooks.replay;
      ctx.wrap = [r = hooks.replay](std::shared_ptr<Advisor>) { return r; };
    } else if (log) {
      const auto remote = hooks.remote;
      // The remote advisor writes its own traffic into the shared log.
      ctx.wrap = [log, remote](std::shared_ptr<Advisor> a) -> std::shared_ptr<Advisor> {
        if (a == remote) return a;
        return std::make_shared<LoggingAdvisor>(std::move(a), log);
      };
    }
    BuiltStack stack = build_stack(cond, cfg.agent, ctx);

    Rng env_rng(mix_seed(seed, stream::kEnv));
    long total = 0;
    const long budget = cfg.total_steps > 0 ? cfg.total_steps : -1;
    for (long episode = 0; cfg.episodes > 0 ? episode < cfg.episodes : total < budget; ++episode) {
      if (hooks.on_episode_start) hooks.on_episode_start(episode);
      Observation obs = env->reset(env_rng);
      double reward = 0.0;
      bool done = false;
      MetricsRow running{episode, 0.0, 0.0, 0, 0, 0};
      for (long t = 0; t < cfg.max_steps_per_episode && !(budget >= 0 && total >= budget); ++t) {
        recorder.begin_decision(episode, t);
        const std::size_t rows_before = recorder.rows.size();
        const ActionId a = stack.top->act(obs, reward);
        const StepOutcome out = env->step(a, env_rng);
        recorder.executed(obs.state, a, out);
        ++total;
        running.blocked += static_cast<long>(recorder.rows.size() - rows_before - 1);
        running.episode_return += out.reward;
        running.catastrophes += out.catastrophe;
        running.steps = t + 1;
        if (hooks.on_step) hooks.on_step({*env, episode, t, a, out, running});
        obs = out.next;
        reward = out.reward;
        if (out.done) {
          done = true;
          break;
        }
      }
      stack.top->end_episode(obs, reward, done);
      recorder.end_episode();
    }

    for (std::size_t i = 0; i < stack.pruners.size(); ++i) {
      res.info["pruners"].push_back({{"blocked", stack.pruners[i]->blocked_count()}, {"forced", stack.pruners[i]->forced_count()}});
    }
    if (stack.simulation) res.info["simulated_steps"] = stack.simulation->simulated_steps();
    if (stack.blocker) {
      res.info["blocker"] = {{"classifier_active", stack.blocker->status() == GateStatus::kClassifierActive},
                             {"samples", stack.blocker->dataset().size()},
                             {"gate_attempts", stack.blocker->gate_history().size()}};
      if (auto h = stack.blocker->handoff_step()) res.info["blocker"]["handoff_step"] = *h;
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    spdlog::error("{} seed {}: {}", cond.name, seed, e.what());
  }
  res.record = std::move(recorder.rows);
  res.metrics = episode_metrics(res.record);
  res.messages = log_text.str();
  return res;
}

struct ExperimentResult {
  std::vector<SeedResult> runs;  // condition-major, seeds in config order

  bool ok() const {
    return std::none_of(runs.begin(), runs.end(), [](const SeedResult& r) { return r.error.has_value(); });
  }
};

/// Runs every (condition, seed) pair, in parallel over `workers` threads
/// (0 = hardware concurrency). Output order does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {}, unsigned workers = 0) {
  struct Job {
    const ConditionConfig* cond;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& c : cfg.conditions) {
    for (auto s : cfg.seeds) jobs.push_back({&c, s});
  }
  ExperimentResult result;
  result.runs.resize(jobs.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  // A live session serialises everything through one advisor.
  if (hooks.remote || hooks.replay || hooks.log) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) result.runs[i] = run_seed(cfg, *jobs[i].cond, jobs[i].seed, hooks);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return result;
}

}  // namespace hitl
