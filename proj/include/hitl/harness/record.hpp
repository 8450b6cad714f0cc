#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hitl/core/format.hpp"
#include "hitl/core/types.hpp"

namespace hitl {

/// CSV schema version written into every run manifest.
inline constexpr int kCsvSchemaVersion = 1;

/// One row per agent proposal. A blocked proposal gets its own row with no
/// executed action and no raw reward; the environment did not move.
struct StepRow {
  long episode = 0;
  /// Environment step within the episode. Blocked rows share the index of the
  /// step that eventually executed.
  long step = 0;
  StateId state = 0;
  ActionId proposed = kNoAction;
  std::optional<ActionId> executed;
  std::optional<double> raw_reward;
  /// What the agent received for this row (filled at its next call).
  std::optional<double> delivered_reward;
  bool blocked = false;
  bool catastrophe = false;
  /// Re-query budget ran out and the fallback action replaced the proposal.
  bool forced = false;
};

using RunRecord = std::vector<StepRow>;

struct MetricsRow {
  long episode = 0;
  double episode_return = 0.0;
  double cumulative_return = 0.0;
  long catastrophes = 0;
  long blocked = 0;
  long steps = 0;
};

inline constexpr const char* kRunRecordHeader =
    "episode,step,state,action_proposed,action_executed,raw_reward,delivered_reward,blocked,catastrophe,forced";
inline constexpr const char* kMetricsHeader = "episode,return,cumulative_return,catastrophes,blocked,steps";

inline void write_row(std::ostream& out, const StepRow& r) {
  out << r.episode << ',' << r.step << ',' << r.state << ',' << r.proposed << ',' << format_optional(r.executed) << ','
      << format_optional(r.raw_reward) << ',' << format_optional(r.delivered_reward) << ',' << int(r.blocked) << ','
      << int(r.catastrophe) << ',' << int(r.forced) << '\n';
}

inline void write_run_record(std::ostream& out, const RunRecord& rec) {
  out << kRunRecordHeader << '\n';
  for (const auto& r : rec) write_row(out, r);
}

inline void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& m : rows) {
    out << m.episode << ',' << format_number(m.episode_return) << ',' << format_number(m.cumulative_return) << ','
        << m.catastrophes << ',' << m.blocked << ',' << m.steps << '\n';
  }
}

/// Parses a metrics CSV written by write_metrics.
inline std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != kMetricsHeader) throw ConfigurationError(path + ": unexpected metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricsRow m;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (std::size_t c; (c = line.find(',', pos)) != std::string::npos; pos = c + 1) f.push_back(line.substr(pos, c - pos));
    f.push_back(line.substr(pos));
    if (f.size() != 6) throw ConfigurationError(path + ": malformed row '" + line + "'");
    m.episode = std::stol(f[0]);
    m.episode_return = std::stod(f[1]);
    m.cumulative_return = std::stod(f[2]);
    m.catastrophes = std::stol(f[3]);
    m.blocked = std::stol(f[4]);
    m.steps = std::stol(f[5]);
    rows.push_back(m);
  }
  return rows;
}

/// Per-episode metrics from a run record. Returns use raw environment reward.
inline std::vector<MetricsRow> episode_metrics(const RunRecord& rec) {
  std::vector<MetricsRow> out;
  for (const auto& r : rec) {
    if (out.empty() || out.back().episode != r.episode) out.push_back({r.episode, 0.0, 0.0, 0, 0, 0});
    MetricsRow& m = out.back();
    if (r.blocked) {
      ++m.blocked;
      continue;
    }
    m.episode_return += r.raw_reward.value_or(0.0);
    m.catastrophes += r.catastrophe;
    ++m.steps;
  }
  double cumulative = 0.0;
  for (auto& m : out) m.cumulative_return = cumulative += m.episode_return;
  return out;
}

}  // namespace hitl
