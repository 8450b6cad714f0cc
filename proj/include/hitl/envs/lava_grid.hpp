#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "hitl/envs/environment.hpp"
#include "hitl/envs/grid.hpp"
#include "hitl/mdp/mdp.hpp"

namespace hitl {

namespace lava {
enum Action : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::size_t kNumActions = 4;
}  // namespace lava

/// Gridworld with lava pits. Cells are labelled 10*x + y in figures and logs.
struct GridSpec {
  int width = 5;
  int height = 5;
  std::set<Cell> lava{{4, 3}, {4, 2}};
  Cell goal{5, 1};
  Cell start{1, 3};
  double step_reward = 0.0;
  double goal_reward = 1.0;
  double lava_reward = -200.0;

  std::size_t n_states() const { return static_cast<std::size_t>(width * height); }
  bool in_bounds(Cell c) const { return c.x >= 1 && c.x <= width && c.y >= 1 && c.y <= height; }
  bool is_lava(Cell c) const { return lava.count(c) > 0; }
  bool is_terminal(Cell c) const { return is_lava(c) || c == goal; }

  StateId id(Cell c) const { return static_cast<StateId>((c.y - 1) * width + (c.x - 1)); }
  Cell cell(StateId s) const { return {s % width + 1, s / width + 1}; }

  void validate() const {
    if (width < 1 || height < 1) throw ConfigurationError("GridSpec: empty grid");
    if (!in_bounds(goal) || !in_bounds(start)) throw ConfigurationError("GridSpec: goal/start out of bounds");
    for (Cell c : lava) {
      if (!in_bounds(c)) throw ConfigurationError("GridSpec: lava cell out of bounds");
    }
    if (is_lava(goal)) throw ConfigurationError("GridSpec: goal lies in lava");
    if (is_lava(start)) throw ConfigurationError("GridSpec: start lies in lava");
    if (start == goal) throw ConfigurationError("GridSpec: start equals goal");
    if (goal_reward != 1.0 || lava_reward != -200.0) {
      throw ConfigurationError("GridSpec: goal reward must be +1 and lava reward -200");
    }
  }
};

inline int cell_label(Cell c) { return 10 * c.x + c.y; }

/// Unprotected grid dynamics: deterministic moves, walls clamp, lava and goal terminate.
inline TransitionSample lavagrid_step(const GridSpec& spec, Cell from, ActionId action) {
  if (!spec.in_bounds(from)) {
    throw UsageError("lavagrid_step: cell (" + std::to_string(from.x) + "," + std::to_string(from.y) + ") out of bounds");
  }
  if (spec.is_terminal(from)) throw UsageError("lavagrid_step: stepping a terminal cell");
  if (action < 0 || action >= static_cast<ActionId>(lava::kNumActions)) throw UsageError("lavagrid_step: bad action");

  static constexpr std::array<std::array<int, 2>, 4> kDelta{{{0, 1}, {0, -1}, {-1, 0}, {1, 0}}};
  Cell to{std::clamp(from.x + kDelta[action][0], 1, spec.width), std::clamp(from.y + kDelta[action][1], 1, spec.height)};

  TransitionSample out{spec.id(from), action, spec.step_reward, spec.id(to), false};
  if (spec.is_lava(to)) {
    out.reward = spec.lava_reward;
    out.done = true;
  } else if (to == spec.goal) {
    out.reward = spec.goal_reward;
    out.done = true;
  }
  return out;
}

inline void to_json(nlohmann::json& j, const Cell& c) { j = nlohmann::json::array({c.x, c.y}); }
inline void from_json(const nlohmann::json& j, Cell& c) {
  c.x = j.at(0).get<int>();
  c.y = j.at(1).get<int>();
}

inline void to_json(nlohmann::json& j, const GridSpec& g) {
  j = nlohmann::json{{"width", g.width},         {"height", g.height},         {"lava", g.lava},
                     {"goal", g.goal},           {"start", g.start},           {"step_reward", g.step_reward},
                     {"goal_reward", g.goal_reward}, {"lava_reward", g.lava_reward}};
}

inline void from_json(const nlohmann::json& j, GridSpec& g) {
  g = GridSpec{};
  g.width = j.value("width", g.width);
  g.height = j.value("height", g.height);
  if (j.contains("lava")) g.lava = j.at("lava").get<std::set<Cell>>();
  if (j.contains("goal")) g.goal = j.at("goal").get<Cell>();
  if (j.contains("start")) g.start = j.at("start").get<Cell>();
  g.step_reward = j.value("step_reward", g.step_reward);
  g.goal_reward = j.value("goal_reward", g.goal_reward);
  g.lava_reward = j.value("lava_reward", g.lava_reward);
  g.validate();
}

class LavaGridEnv final : public Environment {
 public:
  explicit LavaGridEnv(GridSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const GridSpec& spec() const { return spec_; }
  Cell position() const { return pos_; }

  std::string name() const override { return "lavagrid"; }
  std::size_t n_states() const override { return spec_.n_states(); }
  std::size_t n_actions() const override { return lava::kNumActions; }
  double max_reward() const override { return std::max(spec_.goal_reward, spec_.step_reward); }

  Observation reset(Rng&) override {
    pos_ = spec_.start;
    return {spec_.id(pos_), {}};
  }

  StepOutcome step(ActionId action, Rng&) override {
    const TransitionSample t = lavagrid_step(spec_, pos_, action);
    pos_ = spec_.cell(t.next_state);
    return {{t.next_state, {}}, t.reward, t.done, spec_.is_lava(pos_)};
  }

  nlohmann::json frame() const override {
    return {{"env", "lavagrid"}, {"width", spec_.width}, {"height", spec_.height}, {"lava", spec_.lava},
            {"goal", spec_.goal}, {"agent", pos_}};
  }

 private:
  GridSpec spec_;
  Cell pos_{};
};

}  // namespace hitl
