#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hitl/core/learner.hpp"
#include "hitl/core/rng.hpp"

namespace hitl {

struct QLearningParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon = 0.2;
  double init = 0.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigurationError("Q-learning: alpha must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigurationError("Q-learning: epsilon must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigurationError("Q-learning: gamma must lie in [0, 1]");
  }
};

/// Tabular epsilon-greedy Q-learning.
///
/// Exploration draws one uniform number per decision and a second only when
/// exploring, so two learners with the same seed consume the generator
/// identically whatever their Q-values are.
class QLearner final : public Learner {
 public:
  QLearner(std::size_t n_states, std::size_t n_actions, QLearningParams params, std::uint64_t seed)
      : QLearner(std::vector<std::vector<double>>(n_states, std::vector<double>(n_actions, params.init)), params, seed) {}

  /// Starts from an explicit per-(s, a) initial table.
  QLearner(std::vector<std::vector<double>> init, QLearningParams params, std::uint64_t seed)
      : params_(params), q_(std::move(init)), rng_(seed) {
    params_.validate();
    if (q_.empty() || q_.front().empty()) throw ConfigurationError("Q-learning: empty Q table");
  }

  ActionId act(const Observation& obs, double reward) override {
    check(obs.state);
    learn(obs.state, reward);
    const ActionId a = choose(obs.state);
    prev_ = {obs.state, a};
    return a;
  }

  void end_episode(const Observation& obs, double reward, bool /*terminal*/) override {
    check(obs.state);
    learn(obs.state, reward);
    prev_.reset();
  }

  /// Lowest-id maximiser of the row.
  ActionId greedy(StateId s) const {
    const auto& row = q_.at(s);
    ActionId best = 0;
    for (std::size_t a = 1; a < row.size(); ++a) {
      if (row[a] > row[best]) best = static_cast<ActionId>(a);
    }
    return best;
  }

  const std::vector<std::vector<double>>& q() const { return q_; }
  const QLearningParams& params() const { return params_; }

  nlohmann::json to_json() const {
    return {{"alpha", params_.alpha}, {"gamma", params_.gamma}, {"epsilon", params_.epsilon}, {"q", q_}};
  }

 private:
  struct Prev {
    StateId state;
    ActionId action;
  };

  void check(StateId s) const {
    if (s < 0 || static_cast<std::size_t>(s) >= q_.size()) {
      throw UsageError("Q-learning: state " + std::to_string(s) + " outside the declared range");
    }
  }

  void learn(StateId s, double reward) {
    if (!prev_) return;
    const auto& row = q_[s];
    double best_next = row[0];
    for (double v : row) best_next = std::max(best_next, v);
    double& target = q_[prev_->state][prev_->action];
    target += params_.alpha * (reward + params_.gamma * best_next - target);
  }

  ActionId choose(StateId s) {
    if (rng_.uniform() < params_.epsilon) return static_cast<ActionId>(rng_.index(q_[s].size()));
    return greedy(s);
  }

  QLearningParams params_;
  std::vector<std::vector<double>> q_;
  Rng rng_;
  std::optional<Prev> prev_;
};

}  // namespace hitl
