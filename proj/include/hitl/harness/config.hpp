#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hitl/envs/compile.hpp"

namespace hitl {

/// Bumped whenever the experiment config layout changes incompatibly.
inline constexpr int kConfigVersion = 1;

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

/// Environment description: {"type": "lavagrid" | "taxi" | "catcher", ...layout}.
struct EnvConfig {
  std::string type;
  nlohmann::json spec;

  /// Accepts an inline object or {"file": path}, resolved against `base_dir`.
  static EnvConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (j.is_string() || (j.is_object() && j.contains("file"))) {
      const std::filesystem::path file = j.is_string() ? j.get<std::string>() : j.at("file").get<std::string>();
      const auto path = file.is_absolute() ? file : base_dir / file;
      return from_json(read_json_file(path), path.parent_path());
    }
    if (!j.is_object() || !j.contains("type")) throw ConfigurationError("env config needs a \"type\"");
    EnvConfig c{j.at("type").get<std::string>(), j};
    if (c.type != "lavagrid" && c.type != "taxi" && c.type != "catcher") {
      throw ConfigurationError("unknown env type '" + c.type + "'");
    }
    return c;
  }

  GridSpec grid() const { return spec.get<GridSpec>(); }
  TaxiSpec taxi() const { return spec.get<TaxiSpec>(); }
  CatcherParams catcher() const { return spec.get<CatcherParams>(); }
};

inline std::unique_ptr<Environment> make_env(const EnvConfig& c) {
  if (c.type == "lavagrid") return std::make_unique<LavaGridEnv>(c.grid());
  if (c.type == "taxi") return std::make_unique<TaxiEnv>(c.taxi());
  return std::make_unique<CatcherEnv>(c.catcher());
}

inline MdpSpec compile_env(const EnvConfig& c, double gamma, std::size_t max_states = CompileOptions{}.max_states) {
  const CompileOptions opts{max_states, gamma};
  if (c.type == "lavagrid") return compile_to_mdp(c.grid(), opts);
  if (c.type == "taxi") return compile_to_mdp(c.taxi(), opts);
  return compile_to_mdp(c.catcher(), opts);
}

/// One arm of an experiment: a named protocol stack,
/// {"name": ..., "protocol": ["prune", ...], "prune": {...}, ...}.
struct ConditionConfig {
  std::string name;
  nlohmann::json body;

  std::vector<std::string> protocols() const {
    if (!body.contains("protocol")) return {};
    const auto& p = body.at("protocol");
    if (p.is_string()) return {p.get<std::string>()};
    return p.get<std::vector<std::string>>();
  }

  nlohmann::json params(const std::string& protocol) const {
    return body.contains(protocol) ? body.at(protocol) : nlohmann::json::object();
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvConfig env;
  nlohmann::json agent;
  std::vector<ConditionConfig> conditions;
  /// Condition the others are compared against in the summary.
  std::optional<std::string> baseline;
  /// Exactly one of the two budgets is positive.
  long episodes = 0;
  long total_steps = 0;
  long max_steps_per_episode = 200;
  std::vector<std::uint64_t> seeds;
  std::string output = "out";
  double gamma = 0.95;
  bool record_steps = true;
  bool log_messages = false;

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    const int version = j.value("version", kConfigVersion);
    if (version != kConfigVersion) {
      throw ConfigurationError("config version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kConfigVersion) + ")");
    }
    c.name = j.value("name", c.name);
    if (!j.contains("env")) throw ConfigurationError("config needs an \"env\"");
    c.env = EnvConfig::from_json(j.at("env"), base_dir);
    c.agent = j.value("agent", nlohmann::json{{"type", "qlearning"}});
    if (j.contains("conditions")) {
      for (const auto& cj : j.at("conditions")) {
        if (!cj.contains("name")) throw ConfigurationError("every condition needs a \"name\"");
        c.conditions.push_back({cj.at("name").get<std::string>(), cj});
      }
    } else {
      c.conditions.push_back({"default", j});
    }
    if (j.contains("baseline")) c.baseline = j.at("baseline").get<std::string>();
    c.episodes = j.value("episodes", 0L);
    c.total_steps = j.value("steps", 0L);
    c.max_steps_per_episode = j.value("max_steps_per_episode", c.max_steps_per_episode);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_array()) {
        c.seeds = s.get<std::vector<std::uint64_t>>();
      } else {
        const auto first = s.value("first", std::uint64_t{1});
        for (std::uint64_t i = 0; i < s.at("count").get<std::uint64_t>(); ++i) c.seeds.push_back(first + i);
      }
    }
    c.output = j.value("output", c.output);
    c.gamma = j.value("gamma", c.gamma);
    c.record_steps = j.value("record_steps", c.record_steps);
    c.log_messages = j.value("log_messages", c.log_messages);
    c.validate();
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    return from_json(read_json_file(path), path.parent_path());
  }

  void validate() const {
    if (seeds.empty()) throw ConfigurationError("config lists no seeds");
    if ((episodes > 0) == (total_steps > 0)) throw ConfigurationError("set exactly one of \"episodes\" and \"steps\"");
    if (episodes < 0 || total_steps < 0) throw ConfigurationError("negative budget");
    if (max_steps_per_episode <= 0) throw ConfigurationError("max_steps_per_episode must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigurationError("gamma must lie in [0, 1)");
    std::set<std::string> names;
    for (const auto& cond : conditions) {
      if (!names.insert(cond.name).second) throw ConfigurationError("duplicate condition '" + cond.name + "'");
    }
    if (baseline && !names.count(*baseline)) throw ConfigurationError("baseline '" + *baseline + "' is not a condition");
  }
};

}  // namespace hitl
