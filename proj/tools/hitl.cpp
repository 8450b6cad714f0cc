#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hitl/bridge/serve.hpp"
#include "hitl/hitl.hpp"

namespace {

void print_summary(const std::vector<hitl::SummaryRow>& rows) { hitl::write_summary(std::cout, rows); }

hitl::ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  auto cfg = hitl::ExperimentConfig::load(path);
  if (seed) cfg.seeds = {*seed};
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-in-the-loop RL protocols: experiments, summaries and live sessions"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

  std::string config_path, out_dir, replay_path, in_dir, condition, address = "127.0.0.1";
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  unsigned short port = 8080;
  long timeout_ms = 0;

  auto* run = app.add_subcommand("run", "Run an experiment config and write CSVs");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed-override", seed, "Run this seed only");
  run->add_option("--out", out_dir, "Output directory (default: the config's \"output\")");
  run->add_option("--replay", replay_path, "Answer every advisor query from a recorded message log")
      ->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Parallel seed runs (0 = one per core)")->capture_default_str();

  auto* summarize = app.add_subcommand("summarize", "Recompute summary.csv from a run directory");
  summarize->add_option("--in", in_dir, "Directory written by run")->required()->check(CLI::ExistingDirectory);

  auto* serve = app.add_subcommand("serve", "Run one seed with a live operator over WebSocket");
  serve->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--address", address, "Bind address")->capture_default_str();
  serve->add_option("--seed", seed, "Seed (default: the first in the config)");
  serve->add_option("--condition", condition, "Condition name (default: the first)");
  serve->add_option("--timeout-ms", timeout_ms, "Default-allow unanswered queries after this long (0 = wait forever)");
  serve->add_option("--out", out_dir, "Output directory (default: the config's \"output\")");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) {
      auto cfg = load(config_path, seed);
      hitl::RunHooks hooks;
      if (!replay_path.empty()) {
        if (cfg.conditions.size() * cfg.seeds.size() != 1) {
          throw hitl::ConfigurationError("--replay needs a single condition and seed (use --seed-override)");
        }
        hooks.replay = hitl::ReplayAdvisor::from_file(replay_path);
      }
      const auto result = hitl::run_experiment(cfg, hooks, workers);
      const std::filesystem::path dir = out_dir.empty() ? cfg.output : out_dir;
      print_summary(hitl::write_outputs(cfg, result, dir));
      std::cerr << "wrote " << dir.string() << "\n";
      return result.ok() ? 0 : 1;
    }
    if (*summarize) {
      print_summary(hitl::summarize_dir(in_dir));
      return 0;
    }
    auto cfg = load(config_path, seed);
    const auto it = condition.empty() ? cfg.conditions.begin()
                                      : std::find_if(cfg.conditions.begin(), cfg.conditions.end(),
                                                     [&](const auto& c) { return c.name == condition; });
    if (it == cfg.conditions.end()) throw hitl::ConfigurationError("no condition named '" + condition + "'");
    cfg.conditions = {*it};
    cfg.seeds = {cfg.seeds.front()};
    cfg.baseline.reset();
    cfg.log_messages = true;
    hitl::ServeOptions opts;
    opts.port = port;
    opts.address = address;
    if (timeout_ms > 0) opts.session.query_timeout = std::chrono::milliseconds(timeout_ms);
    hitl::ExperimentResult result;
    result.runs.push_back(hitl::serve_session(cfg, cfg.conditions.front(), cfg.seeds.front(), opts));
    const std::filesystem::path dir = out_dir.empty() ? cfg.output : out_dir;
    print_summary(hitl::write_outputs(cfg, result, dir));
    return result.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
