#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hitl/core/learner.hpp"

namespace hitl {

/// Append-only record of simulated interaction: (state, reward, action) per
/// step, plus the undiscounted return of every finished simulated episode.
class SimHistory {
 public:
  struct Entry {
    StateId state;
    double reward;
    ActionId action;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void append(StateId s, double r, ActionId a) { entries_.push_back({s, r, a}); }
  void finish_episode(double undiscounted_return) { episode_returns_.push_back(undiscounted_return); }

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<double>& episode_returns() const { return episode_returns_; }

 private:
  std::vector<Entry> entries_;
  std::vector<double> episode_returns_;
};

enum class QueryKind { kPruneCheck, kRewardOverride, kActionOverride, kReadiness, kStateMap, kCatastropheLabel };

inline const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::kPruneCheck: return "prune";
    case QueryKind::kRewardOverride: return "reward";
    case QueryKind::kActionOverride: return "action";
    case QueryKind::kReadiness: return "readiness";
    case QueryKind::kStateMap: return "state_map";
    case QueryKind::kCatastropheLabel: return "label";
  }
  return "?";
}

/// X_in: what the protocol shows the human.
struct AdviceQuery {
  QueryKind kind = QueryKind::kPruneCheck;
  Observation state;
  ActionId proposed = kNoAction;
  std::optional<double> reward;
  const SimHistory* history = nullptr;

  /// Throws UsageError when a field the kind needs is missing.
  void validate() const {
    const bool needs_action = kind == QueryKind::kPruneCheck || kind == QueryKind::kCatastropheLabel;
    if (needs_action && proposed == kNoAction) throw UsageError(std::string(to_string(kind)) + " query without an action");
    if (kind == QueryKind::kRewardOverride && !reward) throw UsageError("reward query without a reward");
    if (kind == QueryKind::kReadiness && history == nullptr) throw UsageError("readiness query without a history");
  }
};

/// X_out. Only the field matching the query kind is read.
struct AdviceResponse {
  std::optional<bool> block;     // prune-check, catastrophe-label
  std::optional<double> reward;  // reward-override
  std::optional<ActionId> action;
  std::optional<bool> ready;
  std::optional<StateId> state;

  friend bool operator==(const AdviceResponse&, const AdviceResponse&) = default;
};

/// The human H : X_in -> X_out. Stateful; called synchronously, one query at a time.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual AdviceResponse respond(const AdviceQuery& query) = 0;
};

/// Programmatic stand-in for a human.
class ScriptedAdvisor final : public Advisor {
 public:
  using Fn = std::function<AdviceResponse(const AdviceQuery&)>;

  explicit ScriptedAdvisor(Fn fn) : fn_(std::move(fn)) {
    if (!fn_) throw ConfigurationError("scripted advisor without a response function");
  }

  AdviceResponse respond(const AdviceQuery& query) override {
    query.validate();
    return fn_(query);
  }

 private:
  Fn fn_;
};

using PrunePredicate = std::function<bool(const Observation&, ActionId)>;

/// Answers prune-check and catastrophe-label queries with a fixed predicate.
inline std::shared_ptr<Advisor> predicate_advisor(PrunePredicate delta) {
  return std::make_shared<ScriptedAdvisor>([d = std::move(delta)](const AdviceQuery& q) {
    AdviceResponse r;
    r.block = d(q.state, q.proposed);
    return r;
  });
}

/// Answers action-override queries with a state -> action policy.
inline std::shared_ptr<Advisor> policy_advisor(std::function<ActionId(const Observation&)> policy) {
  return std::make_shared<ScriptedAdvisor>([p = std::move(policy)](const AdviceQuery& q) {
    AdviceResponse r;
    r.action = p(q.state);
    return r;
  });
}

/// Declares the agent ready once the mean return of the last `window`
/// simulated episodes reaches `threshold`.
inline std::shared_ptr<Advisor> mean_return_readiness(std::size_t window, double threshold) {
  return std::make_shared<ScriptedAdvisor>([window, threshold](const AdviceQuery& q) {
    AdviceResponse r;
    const auto& returns = q.history->episode_returns();
    if (returns.size() < window || window == 0) {
      r.ready = false;
      return r;
    }
    double sum = 0.0;
    for (std::size_t i = returns.size() - window; i < returns.size(); ++i) sum += returns[i];
    r.ready = sum / static_cast<double>(window) >= threshold;
    return r;
  });
}

/// Turns prune-check queries to an advisor into a predicate.
inline PrunePredicate advisor_predicate(std::shared_ptr<Advisor> advisor) {
  if (!advisor) throw ConfigurationError("pruning needs an advisor");
  return [adv = std::move(advisor)](const Observation& obs, ActionId a) {
    AdviceQuery q;
    q.kind = QueryKind::kPruneCheck;
    q.state = obs;
    q.proposed = a;
    return adv->respond(q).block.value_or(false);
  };
}

}  // namespace hitl
