#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hitl/harness/runner.hpp"

namespace hitl {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample SD; zero for a single value
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  if (xs.empty()) return out;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return {xs.front(), 0.0};
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

struct AggregateRow {
  long episode = 0;
  MeanSd episode_return;
  MeanSd cumulative_return;
  double mean_catastrophes = 0.0;
  std::size_t seeds = 0;
};

/// Mean and SD across seeds per episode index.
inline std::vector<AggregateRow> aggregate(const std::vector<std::vector<MetricsRow>>& per_seed) {
  std::vector<AggregateRow> out;
  for (std::size_t e = 0;; ++e) {
    std::vector<double> ret, cum, cat;
    for (const auto& rows : per_seed) {
      if (e < rows.size()) {
        ret.push_back(rows[e].episode_return);
        cum.push_back(rows[e].cumulative_return);
        cat.push_back(static_cast<double>(rows[e].catastrophes));
      }
    }
    if (ret.empty()) break;
    out.push_back({static_cast<long>(e), mean_sd(ret), mean_sd(cum), mean_sd(cat).mean, ret.size()});
  }
  return out;
}

struct SummaryRow {
  std::string condition;
  std::size_t seeds = 0;
  std::size_t failed = 0;
  MeanSd final_cumulative;
  MeanSd mean_return;  // per-seed mean episode return
  long total_catastrophes = 0;
  long total_blocked = 0;
  /// Final mean cumulative return over the baseline's; absent when undefined.
  std::optional<double> ratio;
};

struct ConditionMetrics {
  std::string name;
  std::vector<std::vector<MetricsRow>> seeds;
  std::size_t failed = 0;
};

inline std::vector<SummaryRow> summarize(const std::vector<ConditionMetrics>& conditions,
                                         const std::optional<std::string>& baseline) {
  std::vector<SummaryRow> out;
  for (const auto& c : conditions) {
    SummaryRow row;
    row.condition = c.name;
    row.seeds = c.seeds.size();
    row.failed = c.failed;
    std::vector<double> finals, means;
    for (const auto& rows : c.seeds) {
      finals.push_back(rows.empty() ? 0.0 : rows.back().cumulative_return);
      means.push_back(rows.empty() ? 0.0 : rows.back().cumulative_return / static_cast<double>(rows.size()));
      for (const auto& m : rows) {
        row.total_catastrophes += m.catastrophes;
        row.total_blocked += m.blocked;
      }
    }
    row.final_cumulative = mean_sd(finals);
    row.mean_return = mean_sd(means);
    out.push_back(row);
  }
  if (baseline) {
    const auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& r) { return r.condition == *baseline; });
    if (it != out.end()) {
      const double base = it->final_cumulative.mean;
      for (auto& r : out) {
        if (base != 0.0 && r.seeds > 0) r.ratio = r.final_cumulative.mean / base;
      }
    }
  }
  return out;
}

inline constexpr const char* kAggregateHeader =
    "episode,mean_return,sd_return,mean_cumulative_return,sd_cumulative_return,mean_catastrophes,seeds";
inline constexpr const char* kSummaryHeader =
    "condition,seeds,failed_seeds,final_cumulative_mean,final_cumulative_sd,mean_return,sd_return,total_catastrophes,"
    "total_blocked,ratio_vs_baseline";

inline void write_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n';
  for (const auto& r : rows) {
    out << r.episode << ',' << format_number(r.episode_return.mean) << ',' << format_number(r.episode_return.sd) << ','
        << format_number(r.cumulative_return.mean) << ',' << format_number(r.cumulative_return.sd) << ','
        << format_number(r.mean_catastrophes) << ',' << r.seeds << '\n';
  }
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.condition << ',' << r.seeds << ',' << r.failed << ',' << format_number(r.final_cumulative.mean) << ','
        << format_number(r.final_cumulative.sd) << ',' << format_number(r.mean_return.mean) << ','
        << format_number(r.mean_return.sd) << ',' << r.total_catastrophes << ',' << r.total_blocked << ','
        << (r.ratio ? format_number(*r.ratio) : std::string("N/A")) << '\n';
  }
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << text;
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

}  // namespace detail

inline std::vector<ConditionMetrics> collect(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::vector<ConditionMetrics> out;
  for (const auto& c : cfg.conditions) {
    ConditionMetrics cm{c.name, {}, 0};
    for (const auto& r : result.runs) {
      if (r.condition != c.name) continue;
      if (r.error) {
        ++cm.failed;
      } else {
        cm.seeds.push_back(r.metrics);
      }
    }
    out.push_back(std::move(cm));
  }
  return out;
}

/// Writes per-seed CSVs and logs, per-condition aggregates, the summary and a
/// manifest into `dir`.
///
///   manifest.json, summary.csv
///   <condition>/aggregate.csv
///   <condition>/seed_<n>_metrics.csv, seed_<n>_steps.csv, seed_<n>_messages.jsonl
inline std::vector<SummaryRow> write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest{{"name", cfg.name},
                          {"csv_schema_version", kCsvSchemaVersion},
                          {"seeds", cfg.seeds},
                          {"env", cfg.env.spec},
                          {"agent", cfg.agent},
                          {"failures", nlohmann::json::array()}};
  if (cfg.baseline) manifest["baseline"] = *cfg.baseline;
  for (const auto& c : cfg.conditions) manifest["conditions"].push_back(c.name);

  for (const auto& r : result.runs) {
    const fs::path cdir = dir / r.condition;
    fs::create_directories(cdir);
    const std::string stem = "seed_" + std::to_string(r.seed);
    if (r.error) {
      manifest["failures"].push_back({{"condition", r.condition}, {"seed", r.seed}, {"error", *r.error}});
    }
    detail::write_file(cdir / (stem + "_metrics.csv"), detail::render([&](std::ostream& o) { write_metrics(o, r.metrics); }));
    if (cfg.record_steps) {
      detail::write_file(cdir / (stem + "_steps.csv"), detail::render([&](std::ostream& o) { write_run_record(o, r.record); }));
    }
    if (cfg.log_messages) detail::write_file(cdir / (stem + "_messages.jsonl"), r.messages);
  }
  const auto conditions = collect(cfg, result);
  for (const auto& c : conditions) {
    detail::write_file(dir / c.name / "aggregate.csv",
                       detail::render([&](std::ostream& o) { write_aggregate(o, aggregate(c.seeds)); }));
  }
  const auto rows = summarize(conditions, cfg.baseline);
  detail::write_file(dir / "summary.csv", detail::render([&](std::ostream& o) { write_summary(o, rows); }));
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return rows;
}

/// Recomputes the summary from a directory written by write_outputs.
inline std::vector<SummaryRow> summarize_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto manifest = read_json_file(dir / "manifest.json");
  std::optional<std::string> baseline;
  if (manifest.contains("baseline")) baseline = manifest.at("baseline").get<std::string>();
  std::set<std::pair<std::string, std::uint64_t>> failed;
  for (const auto& f : manifest.at("failures")) {
    failed.emplace(f.at("condition").get<std::string>(), f.at("seed").get<std::uint64_t>());
  }

  std::vector<ConditionMetrics> conditions;
  for (const auto& name : manifest.at("conditions")) {
    ConditionMetrics cm{name.get<std::string>(), {}, 0};
    for (const auto& seed : manifest.at("seeds")) {
      const auto s = seed.get<std::uint64_t>();
      if (failed.count({cm.name, s})) {
        ++cm.failed;
        continue;
      }
      cm.seeds.push_back(read_metrics((dir / cm.name / ("seed_" + std::to_string(s) + "_metrics.csv")).string()));
    }
    conditions.push_back(std::move(cm));
  }
  const auto rows = summarize(conditions, baseline);
  detail::write_file(dir / "summary.csv", detail::render([&](std::ostream& o) { write_summary(o, rows); }));
  return rows;
}

}  // namespace hitl
