#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hitl/envs/environment.hpp"

namespace hitl {

namespace catcher {
enum Action : ActionId { kAccelLeft = 0, kAccelRight = 1, kCoast = 2 };
inline constexpr std::size_t kNumActions = 3;
inline constexpr int kVelocityBins = 7;
/// Comparison slack for quantities that live on the accel / fall-rate lattice.
inline constexpr double kEps = 1e-9;
}  // namespace catcher

/// Catcher kinematics. Positions are in [0, 1]; the fruit falls from y = 1.
struct CatcherParams {
  double accel = 0.05;
  double v_limit = 0.3;
  /// Hard bound on |paddle_v|, keeps the lattice finite. Exceeding v_limit is
  /// still a catastrophe; the cap only stops further growth.
  double v_cap = 0.6;
  double paddle_halfwidth = 0.08;
  double fall_rate = 0.02;
  double catch_reward = 1.0;
  double miss_reward = -1.0;
  double catastrophe_reward = -200.0;
  /// Fruit respawns at one of this many evenly spaced x positions.
  int fruit_positions = 21;
  int x_bins = 10;
  int y_bins = 10;

  void validate() const {
    if (!(accel > 0 && v_limit > 0 && v_cap >= v_limit && fall_rate > 0 && paddle_halfwidth >= 0)) {
      throw ConfigurationError("CatcherParams: non-positive kinematic constant");
    }
    if (fruit_positions < 2 || x_bins < 1 || y_bins < 1) throw ConfigurationError("CatcherParams: bad bin counts");
  }

  std::size_t n_discrete_states() const {
    return static_cast<std::size_t>(x_bins) * x_bins * y_bins * catcher::kVelocityBins;
  }
};

struct CatcherState {
  double paddle_x = 0.5;
  double paddle_v = 0.0;
  double fruit_x = 0.5;
  double fruit_y = 1.0;

  friend bool operator==(const CatcherState&, const CatcherState&) = default;
};

struct CatcherStep {
  CatcherState next;
  double reward = 0.0;
  bool caught = false;
  bool missed = false;
  bool catastrophe = false;
};

inline double velocity_delta(const CatcherParams& p, ActionId action) {
  switch (action) {
    case catcher::kAccelLeft: return -p.accel;
    case catcher::kAccelRight: return p.accel;
    case catcher::kCoast: return 0.0;
    default: throw UsageError("catcher: bad action " + std::to_string(action));
  }
}

/// True iff taking `action` at paddle velocity `v` pushes |v| past the speed limit.
inline bool exceeds_speed_limit(const CatcherParams& p, double v, ActionId action) {
  return std::abs(v + velocity_delta(p, action)) > p.v_limit + catcher::kEps;
}

inline double respawn_x(const CatcherParams& p, Rng& rng) {
  return static_cast<double>(rng.index(static_cast<std::size_t>(p.fruit_positions))) / (p.fruit_positions - 1);
}

/// One step: accelerate, check the speed limit, move and clamp the paddle,
/// drop the fruit, score a catch or miss at the bottom and respawn.
inline CatcherStep catcher_step(const CatcherParams& p, const CatcherState& s, ActionId action, Rng& rng) {
  CatcherStep out;
  CatcherState& n = out.next;
  n = s;
  n.paddle_v = s.paddle_v + velocity_delta(p, action);
  if (std::abs(n.paddle_v) > p.v_limit + catcher::kEps) {
    out.catastrophe = true;
    out.reward += p.catastrophe_reward;
  }
  n.paddle_v = std::clamp(n.paddle_v, -p.v_cap, p.v_cap);
  n.paddle_x = std::clamp(s.paddle_x + n.paddle_v, 0.0, 1.0);
  n.fruit_y = s.fruit_y - p.fall_rate;
  if (n.fruit_y <= catcher::kEps) {
    if (std::abs(n.fruit_x - n.paddle_x) <= p.paddle_halfwidth + catcher::kEps) {
      out.caught = true;
      out.reward += p.catch_reward;
    } else {
      out.missed = true;
      out.reward += p.miss_reward;
    }
    n.fruit_x = respawn_x(p, rng);
    n.fruit_y = 1.0;
  }
  return out;
}

inline int velocity_bin(const CatcherParams& p, double v) {
  const long k = std::lround(v / p.accel);
  if (k <= -6) return 0;
  if (k <= -3) return 1;
  if (k <= -1) return 2;
  if (k == 0) return 3;
  if (k <= 2) return 4;
  if (k <= 5) return 5;
  return 6;
}

/// Tabular id the learning agents see: paddle x, fruit x, fruit y, velocity bin.
inline StateId catcher_discretize(const CatcherParams& p, const CatcherState& s) {
  auto bin = [](double x, int n) { return std::clamp(static_cast<int>(std::floor(x * n + catcher::kEps)), 0, n - 1); };
  const int px = bin(s.paddle_x, p.x_bins);
  const int fx = bin(s.fruit_x, p.x_bins);
  const int fy = bin(s.fruit_y, p.y_bins);
  return static_cast<StateId>(((px * p.x_bins + fx) * p.y_bins + fy) * catcher::kVelocityBins + velocity_bin(p, s.paddle_v));
}

inline std::vector<double> catcher_features(const CatcherState& s) {
  return {s.paddle_x, s.paddle_v, s.fruit_x, s.fruit_y};
}

inline CatcherState catcher_from_features(const std::vector<double>& f) {
  if (f.size() != 4) throw UsageError("catcher: expected 4 state features");
  return {f[0], f[1], f[2], f[3]};
}

inline void to_json(nlohmann::json& j, const CatcherParams& p) {
  j = nlohmann::json{{"accel", p.accel},
                     {"v_limit", p.v_limit},
                     {"v_cap", p.v_cap},
                     {"paddle_halfwidth", p.paddle_halfwidth},
                     {"fall_rate", p.fall_rate},
                     {"catch_reward", p.catch_reward},
                     {"miss_reward", p.miss_reward},
                     {"catastrophe_reward", p.catastrophe_reward},
                     {"fruit_positions", p.fruit_positions},
                     {"x_bins", p.x_bins},
                     {"y_bins", p.y_bins}};
}

inline void from_json(const nlohmann::json& j, CatcherParams& p) {
  p = CatcherParams{};
  p.accel = j.value("accel", p.accel);
  p.v_limit = j.value("v_limit", p.v_limit);
  p.v_cap = j.value("v_cap", p.v_cap);
  p.paddle_halfwidth = j.value("paddle_halfwidth", p.paddle_halfwidth);
  p.fall_rate = j.value("fall_rate", p.fall_rate);
  p.catch_reward = j.value("catch_reward", p.catch_reward);
  p.miss_reward = j.value("miss_reward", p.miss_reward);
  p.catastrophe_reward = j.value("catastrophe_reward", p.catastrophe_reward);
  p.fruit_positions = j.value("fruit_positions", p.fruit_positions);
  p.x_bins = j.value("x_bins", p.x_bins);
  p.y_bins = j.value("y_bins", p.y_bins);
  p.validate();
}

class CatcherEnv final : public Environment {
 public:
  explicit CatcherEnv(CatcherParams params) : params_(params) { params_.validate(); }

  const CatcherParams& params() const { return params_; }
  const CatcherState& state() const { return state_; }
  /// Places the env in an arbitrary state (tests and replay).
  Observation set_state(const CatcherState& s) {
    state_ = s;
    return observe();
  }

  std::string name() const override { return "catcher"; }
  std::size_t n_states() const override { return params_.n_discrete_states(); }
  std::size_t n_actions() const override { return catcher::kNumActions; }
  double max_reward() const override { return params_.catch_reward; }

  Observation reset(Rng& rng) override {
    state_ = CatcherState{0.5, 0.0, respawn_x(params_, rng), 1.0};
    return observe();
  }

  StepOutcome step(ActionId action, Rng& rng) override {
    const CatcherStep r = catcher_step(params_, state_, action, rng);
    state_ = r.next;
    return {observe(), r.reward, false, r.catastrophe};
  }

  nlohmann::json frame() const override {
    return {{"env", "catcher"},           {"paddle_x", state_.paddle_x}, {"paddle_v", state_.paddle_v},
            {"fruit_x", state_.fruit_x},  {"fruit_y", state_.fruit_y},   {"v_limit", params_.v_limit},
            {"halfwidth", params_.paddle_halfwidth}};
  }

 private:
  Observation observe() const { return {catcher_discretize(params_, state_), catcher_features(state_)}; }

  CatcherParams params_;
  CatcherState state_{};
};

}  // namespace hitl
