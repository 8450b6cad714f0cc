#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hitl/core/learner.hpp"

namespace hitl {

struct RMaxParams {
  /// A pair is known once visited this many times.
  int known_threshold = 3;
  /// Depth of the expectimax lookahead at decision time.
  int horizon = 4;
  double gamma = 0.95;
  /// Optimistic per-step reward bound.
  double rmax = 1.0;
  /// Convergence tolerance of the leaf evaluation.
  double leaf_tol = 1e-6;

  void validate() const {
    if (known_threshold < 1) throw ConfigurationError("R-max: known threshold must be >= 1");
    if (horizon < 1) throw ConfigurationError("R-max: horizon must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigurationError("R-max: gamma must lie in [0, 1)");
  }
};

/// Model-based R-max.
///
/// Keeps empirical reward and transition estimates for the first
/// `known_threshold` visits of each (s, a); unknown pairs are worth
/// rmax / (1 - gamma). Decisions come from a depth-`horizon` expectimax over
/// that optimistic model. Leaves are scored with the model's own optimistic
/// value function, re-solved whenever a pair becomes known. Ties go to the
/// lowest action id.
class RMaxAgent final : public Learner {
 public:
  RMaxAgent(std::size_t n_states, std::size_t n_actions, RMaxParams params)
      : params_(params),
        n_actions_(n_actions),
        optimistic_(params.rmax / (1.0 - params.gamma)),
        pairs_(n_states, std::vector<PairModel>(n_actions)),
        absorbing_(n_states, false),
        leaf_(n_states, optimistic_) {
    params_.validate();
    if (n_states == 0 || n_actions == 0) throw ConfigurationError("R-max: empty state or action space");
  }

  ActionId act(const Observation& obs, double reward) override {
    check(obs.state);
    record(obs.state, reward);
    const ActionId a = plan(obs.state);
    prev_ = {obs.state, a};
    return a;
  }

  void end_episode(const Observation& obs, double reward, bool terminal) override {
    check(obs.state);
    record(obs.state, reward);
    if (terminal && !absorbing_[obs.state]) {
      absorbing_[obs.state] = true;
      dirty_ = true;
    }
    prev_.reset();
  }

  bool known(StateId s, ActionId a) const { return pairs_.at(s).at(a).count >= params_.known_threshold; }
  int visits(StateId s, ActionId a) const { return pairs_.at(s).at(a).count; }

  /// Root action values of the lookahead from `s`.
  std::vector<double> root_values(StateId s) {
    refresh_leaves();
    memo_.clear();
    std::vector<double> out(n_actions_);
    for (std::size_t a = 0; a < n_actions_; ++a) out[a] = q_value(s, static_cast<ActionId>(a), params_.horizon);
    return out;
  }

 private:
  struct PairModel {
    int count = 0;
    double reward_sum = 0.0;
    std::vector<std::pair<StateId, int>> successors;
  };

  struct Prev {
    StateId state;
    ActionId action;
  };

  void check(StateId s) const {
    if (s < 0 || static_cast<std::size_t>(s) >= pairs_.size()) {
      throw UsageError("R-max: state " + std::to_string(s) + " outside the declared range");
    }
  }

  void record(StateId next, double reward) {
    if (!prev_) return;
    PairModel& m = pairs_[prev_->state][prev_->action];
    if (m.count >= params_.known_threshold) return;
    ++m.count;
    m.reward_sum += reward;
    auto it = std::find_if(m.successors.begin(), m.successors.end(), [&](const auto& p) { return p.first == next; });
    if (it == m.successors.end()) {
      m.successors.emplace_back(next, 1);
    } else {
      ++it->second;
    }
    if (m.count == params_.known_threshold) dirty_ = true;
  }

  double model_q(StateId s, ActionId a, const std::vector<double>& v) const {
    const PairModel& m = pairs_[s][a];
    if (m.count < params_.known_threshold) return optimistic_;
    double expected = 0.0;
    for (const auto& [next, n] : m.successors) expected += n * v[next];
    return m.reward_sum / m.count + params_.gamma * expected / m.count;
  }

  void refresh_leaves() {
    if (!dirty_) return;
    dirty_ = false;
    for (;;) {
      double residual = 0.0;
      for (std::size_t s = 0; s < leaf_.size(); ++s) {
        double best = 0.0;
        if (!absorbing_[s]) {
          best = model_q(static_cast<StateId>(s), 0, leaf_);
          for (std::size_t a = 1; a < n_actions_; ++a) best = std::max(best, model_q(static_cast<StateId>(s), static_cast<ActionId>(a), leaf_));
        }
        residual = std::max(residual, std::abs(best - leaf_[s]));
        leaf_[s] = best;
      }
      if (residual < params_.leaf_tol) return;
    }
  }

  double value(StateId s, int depth) {
    if (absorbing_[s]) return 0.0;
    if (depth == 0) return leaf_[s];
    const long key = static_cast<long>(s) * (params_.horizon + 1) + depth;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double best = q_value(s, 0, depth);
    for (std::size_t a = 1; a < n_actions_; ++a) best = std::max(best, q_value(s, static_cast<ActionId>(a), depth));
    memo_.emplace(key, best);
    return best;
  }

  double q_value(StateId s, ActionId a, int depth) {
    const PairModel& m = pairs_[s][a];
    if (m.count < params_.known_threshold) return optimistic_;
    double expected = 0.0;
    for (const auto& [next, n] : m.successors) expected += n * value(next, depth - 1);
    return m.reward_sum / m.count + params_.gamma * expected / m.count;
  }

  ActionId plan(StateId s) {
    const std::vector<double> q = root_values(s);
    ActionId best = 0;
    for (std::size_t a = 1; a < q.size(); ++a) {
      if (q[a] > q[best]) best = static_cast<ActionId>(a);
    }
    return best;
  }

  RMaxParams params_;
  std::size_t n_actions_;
  double optimistic_;
  std::vector<std::vector<PairModel>> pairs_;
  std::vector<bool> absorbing_;
  std::vector<double> leaf_;
  bool dirty_ = true;
  std::unordered_map<long, double> memo_;
  std::optional<Prev> prev_;
};

}  // namespace hitl
