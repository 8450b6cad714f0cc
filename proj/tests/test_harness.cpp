#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "checks.hpp"

namespace hitl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kConfigs = fs::path(HITL_SOURCE_DIR) / "configs" / "experiments";

json lavagrid_env() { return json{{"file", (fs::path(HITL_SOURCE_DIR) / "configs/envs/lavagrid.json").string()}}; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hitl_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Config, Errors) {
  const json ok{{"env", lavagrid_env()}, {"episodes", 1}, {"seeds", {1}}};
  EXPECT_NO_THROW(ExperimentConfig::from_json(ok));
  auto broken = [&](auto edit) {
    json j = ok;
    edit(j);
    return j;
  };
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j.erase("env"); })), ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j["version"] = 2; })), ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j["steps"] = 100; })), ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j["seeds"] = json::array(); })), ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j["env"] = json{{"type", "chess"}}; })),
               ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) { j["baseline"] = "nope"; })), ConfigurationError);
  EXPECT_THROW(ExperimentConfig::from_json(broken([](json& j) {
                 j["conditions"] = json::array({json{{"name", "a"}}, json{{"name", "a"}}});
               })),
               ConfigurationError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigurationError);
}

TEST(Config, StackErrorsAreRecordedPerSeed) {
  json j{{"env", lavagrid_env()}, {"episodes", 1}, {"seeds", {1}}, {"protocol", {"teleport"}}};
  const auto res = run_experiment(ExperimentConfig::from_json(j), {}, 1);
  ASSERT_EQ(res.runs.size(), 1u);
  ASSERT_TRUE(res.runs[0].error);
  EXPECT_NE(res.runs[0].error->find("teleport"), std::string::npos);
}

TEST(Harness, ShippedConfigsLoad) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    EXPECT_NO_THROW(ExperimentConfig::load(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 7u);
}

TEST(Harness, OptimalScriptOnLavaGridEarnsOptimalValue) {
  const auto cfg = ExperimentConfig::load(kConfigs / "lavagrid_optimal.json");
  const auto res = run_experiment(cfg, {}, 1);
  ASSERT_TRUE(res.ok());
  const RunRecord& rec = res.runs[0].record;
  std::vector<double> rewards;
  for (const auto& r : rec) rewards.push_back(*r.raw_reward);
  const GridSpec g = cfg.env.grid();
  EXPECT_NEAR(discounted_return(rewards, cfg.gamma), value_iteration(compile_to_mdp(g)).v[g.id(g.start)], 1e-7);
  EXPECT_EQ(rec.size(), 6u);
  EXPECT_EQ(res.runs[0].metrics.at(0).episode_return, 1.0);
}

ExperimentConfig small_taxi() {
  auto cfg = ExperimentConfig::load(kConfigs / "taxi_qlearning.json");
  cfg.episodes = 15;
  cfg.seeds = {1, 2, 3};
  cfg.record_steps = true;
  return cfg;
}

TEST(Harness, OutputsAreByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto cfg = small_taxi();
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_outputs(cfg, run_experiment(cfg, {}, 1), a);
  write_outputs(cfg, run_experiment(cfg, {}, 3), b);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, RecordInvariantsUnderPruning) {
  json j{{"env", lavagrid_env()},
         {"agent", {{"type", "qlearning"}, {"epsilon", 0.3}}},
         {"episodes", 40},
         {"max_steps_per_episode", 100},
         {"seeds", {4}},
         {"protocol", {"prune"}},
         {"prune", {{"predicate", "lava"}}}};
  const auto cfg = ExperimentConfig::from_json(j);
  const auto res = run_experiment(cfg, {}, 1);
  ASSERT_TRUE(res.ok());
  const RunRecord& rec = res.runs[0].record;
  std::size_t blocked = 0, executed = 0;
  double raw_total = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const StepRow& r = rec[i];
    if (r.blocked) {
      ++blocked;
      EXPECT_FALSE(r.executed);
      EXPECT_FALSE(r.raw_reward);
      EXPECT_EQ(r.delivered_reward, -200.0);
      // The environment did not move: the next row is in the same state and step.
      ASSERT_LT(i + 1, rec.size());
      EXPECT_EQ(rec[i + 1].state, r.state);
      EXPECT_EQ(rec[i + 1].step, r.step);
    } else {
      ++executed;
      ASSERT_TRUE(r.executed);
      raw_total += *r.raw_reward;
    }
  }
  EXPECT_GT(blocked, 0u);
  long steps = 0, metric_blocked = 0, catastrophes = 0;
  double metric_total = 0.0;
  for (const auto& m : res.runs[0].metrics) {
    steps += m.steps;
    metric_blocked += m.blocked;
    catastrophes += m.catastrophes;
    metric_total += m.episode_return;
  }
  EXPECT_EQ(steps, static_cast<long>(executed));
  EXPECT_EQ(metric_blocked, static_cast<long>(blocked));
  EXPECT_DOUBLE_EQ(metric_total, raw_total);
  EXPECT_DOUBLE_EQ(res.runs[0].metrics.back().cumulative_return, raw_total);
  EXPECT_EQ(catastrophes, 0);
  EXPECT_EQ(checks::forbidden_executions(rec, named_predicate("lava", cfg.env)), 0u);
  EXPECT_EQ(res.runs[0].info["pruners"][0]["blocked"].get<std::size_t>(), blocked);
}

TEST(Harness, CatastrophesAreCountedWithoutPruning) {
  json j{{"env", lavagrid_env()},
         {"agent", {{"type", "qlearning"}, {"epsilon", 0.5}}},
         {"episodes", 30},
         {"seeds", {2}}};
  const auto res = run_experiment(ExperimentConfig::from_json(j), {}, 1);
  long from_metrics = 0, from_record = 0;
  for (const auto& m : res.runs[0].metrics) from_metrics += m.catastrophes;
  for (const auto& r : res.runs[0].record) from_record += r.catastrophe;
  EXPECT_GT(from_record, 0);
  EXPECT_EQ(from_metrics, from_record);
}

TEST(Harness, FailingSeedIsRecordedAndOthersContinue) {
  json j{{"env", lavagrid_env()},
         {"episodes", 3},
         {"seeds", {1, 2}},
         {"conditions",
          {json{{"name", "ok"}, {"protocol", json::array()}},
           json{{"name", "doomed"},
                {"protocol", {"simulate"}},
                {"simulate",
                 {{"readiness", {{"type", "mean_return"}, {"window", 1}, {"threshold", 1e9}}},
                  {"max_total_steps", 300}}}}}},
         {"baseline", "ok"}};
  const auto cfg = ExperimentConfig::from_json(j);
  const auto res = run_experiment(cfg, {}, 1);
  EXPECT_FALSE(res.ok());
  ASSERT_EQ(res.runs.size(), 4u);
  EXPECT_FALSE(res.runs[0].error);
  EXPECT_FALSE(res.runs[1].error);
  EXPECT_TRUE(res.runs[2].error);
  EXPECT_TRUE(res.runs[3].error);
  const fs::path dir = scratch("failing");
  const auto rows = write_outputs(cfg, res, dir);
  EXPECT_EQ(rows[0].failed, 0u);
  EXPECT_EQ(rows[1].failed, 2u);
  const json manifest = read_json_file(dir / "manifest.json");
  EXPECT_EQ(manifest["failures"].size(), 2u);
  const auto again = summarize_dir(dir);
  EXPECT_EQ(again[1].failed, 2u);
  EXPECT_EQ(again[0].final_cumulative.mean, rows[0].final_cumulative.mean);
  fs::remove_all(dir);
}

TEST(Summary, SingleSeedHasZeroSpreadAndZeroBaselineIsNA) {
  std::vector<MetricsRow> seed{{0, 2.0, 2.0, 0, 0, 3}, {1, -2.0, 0.0, 1, 4, 5}};
  const std::vector<ConditionMetrics> conds{{"a", {seed}, 0}, {"base", {seed}, 0}};
  const auto rows = summarize(conds, std::string("base"));
  EXPECT_EQ(rows[0].final_cumulative.sd, 0.0);
  EXPECT_EQ(rows[0].total_catastrophes, 1);
  EXPECT_EQ(rows[0].total_blocked, 4);
  EXPECT_FALSE(rows[0].ratio);
  std::ostringstream out;
  write_summary(out, rows);
  EXPECT_NE(out.str().find(",N/A\n"), std::string::npos);
}

TEST(Summary, RatioAgainstBaseline) {
  const std::vector<ConditionMetrics> conds{{"a", {{{0, 6.0, 6.0, 0, 0, 1}}}, 0}, {"b", {{{0, 3.0, 3.0, 0, 0, 1}}}, 0}};
  const auto rows = summarize(conds, std::string("b"));
  EXPECT_DOUBLE_EQ(*rows[0].ratio, 2.0);
  EXPECT_DOUBLE_EQ(*rows[1].ratio, 1.0);
}

TEST(Summary, MetricsCsvRoundTrip) {
  const std::vector<MetricsRow> rows{{0, 0.1, 0.1, 0, 2, 7}, {1, -200.0, -199.9, 1, 0, 3}};
  const fs::path p = fs::temp_directory_path() / "hitl_metrics.csv";
  {
    std::ofstream out(p);
    write_metrics(out, rows);
  }
  const auto back = read_metrics(p.string());
  fs::remove(p);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].episode_return, -200.0);
  EXPECT_EQ(back[1].cumulative_return, -199.9);
  EXPECT_EQ(back[0].blocked, 2);
}

}  // namespace
}  // namespace hitl
