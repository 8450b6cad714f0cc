#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "hitl/bridge/server.hpp"
#include "hitl/harness/runner.hpp"

namespace hitl {

struct ServeOptions {
  unsigned short port = 8080;
  std::string address = "127.0.0.1";
  SessionOptions session;
  std::chrono::milliseconds heartbeat = std::chrono::seconds(5);
};

/// Runs one (condition, seed) with the stack's "remote" advisors answered by a
/// WebSocket client. Every step emits a state_frame and a metrics message.
/// `on_listening` receives the bound port once clients can connect.
inline SeedResult serve_session(const ExperimentConfig& cfg, const ConditionConfig& cond, std::uint64_t seed,
                                const ServeOptions& opts, const std::function<void(unsigned short)>& on_listening = {}) {
  std::ostringstream text;
  auto log = std::make_shared<MessageLog>(cfg.name + "/" + cond.name + "/" + std::to_string(seed), &text);
  auto core = std::make_shared<SessionCore>(log, opts.session);
  const auto env = make_env(cfg.env);
  core->set_hello({{"env", env->name()},
                   {"n_actions", env->n_actions()},
                   {"condition", cond.name},
                   {"protocol", cond.protocols()},
                   {"seed", seed}});
  WebSocketServer server(core, opts.port, opts.address, opts.heartbeat);
  server.start();
  spdlog::info("session {} listening on ws://{}:{}", core->session(), opts.address, server.port());
  if (on_listening) on_listening(server.port());

  RunHooks hooks;
  hooks.remote = std::make_shared<RemoteAdvisor>(core);
  hooks.log = log;
  bool sim = false;
  hooks.on_sim_phase = [&](bool active) {
    sim = active;
    core->publish({{"type", wire::kStateFrame}, {"phase", active ? "simulation" : "real"}});
  };
  hooks.on_step = [&](const StepEvent& e) {
    core->publish({{"type", wire::kStateFrame},
                   {"phase", sim ? "simulation" : "real"},
                   {"episode", e.episode},
                   {"t", e.step},
                   {"action", e.action},
                   {"reward", e.outcome.reward},
                   {"catastrophe", e.outcome.catastrophe},
                   {"done", e.outcome.done},
                   {"frame", e.env.frame()}});
    core->publish({{"type", wire::kMetrics},
                   {"episode", e.episode},
                   {"return", e.running.episode_return},
                   {"catastrophes", e.running.catastrophes},
                   {"blocked", e.running.blocked},
                   {"steps", e.running.steps}});
  };

  SeedResult result = run_seed(cfg, cond, seed, hooks);
  core->close();
  core->publish({{"type", wire::kMetrics}, {"done", true}, {"error", result.error.value_or("")}});
  server.stop();
  result.messages = text.str();
  return result;
}

}  // namespace hitl
