#pragma once

#include <algorithm>
#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "hitl/envs/environment.hpp"
#include "hitl/envs/grid.hpp"
#include "hitl/mdp/mdp.hpp"

namespace hitl {

namespace taxi {
enum Action : ActionId { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3, kPickup = 4, kDropoff = 5 };
inline constexpr std::size_t kNumActions = 6;

enum class Passenger : int { kWaiting = 0, kInTaxi = 1, kDelivered = 2 };
inline constexpr int kNumPassengerStatus = 3;
}  // namespace taxi

struct TaxiRewards {
  double step = -1.0;
  double dropoff = 20.0;
  double illegal = -10.0;
};

/// Single-passenger taxi on an open grid.
struct TaxiSpec {
  int width = 10;
  int height = 10;
  Cell taxi_start{1, 1};
  Cell passenger_loc{4, 3};
  Cell passenger_dest{2, 2};
  TaxiRewards rewards;

  std::size_t n_states() const { return static_cast<std::size_t>(width * height * taxi::kNumPassengerStatus); }
  bool in_bounds(Cell c) const { return c.x >= 1 && c.x <= width && c.y >= 1 && c.y <= height; }

  void validate() const {
    if (width < 1 || height < 1) throw ConfigurationError("TaxiSpec: empty grid");
    if (!in_bounds(taxi_start) || !in_bounds(passenger_loc) || !in_bounds(passenger_dest)) {
      throw ConfigurationError("TaxiSpec: coordinate out of bounds");
    }
    if (passenger_loc == passenger_dest) throw ConfigurationError("TaxiSpec: passenger already at destination");
  }
};

struct TaxiState {
  Cell taxi{1, 1};
  taxi::Passenger passenger = taxi::Passenger::kWaiting;

  friend bool operator==(const TaxiState&, const TaxiState&) = default;
};

inline StateId taxi_encode(const TaxiSpec& spec, const TaxiState& st) {
  return static_cast<StateId>((static_cast<int>(st.passenger) * spec.height + (st.taxi.y - 1)) * spec.width +
                              (st.taxi.x - 1));
}

inline TaxiState taxi_decode(const TaxiSpec& spec, StateId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= spec.n_states()) throw UsageError("taxi: state id out of range");
  const int cells = spec.width * spec.height;
  const int status = id / cells;
  const int pos = id % cells;
  return {{pos % spec.width + 1, pos / spec.width + 1}, static_cast<taxi::Passenger>(status)};
}

inline TransitionSample taxi_step(const TaxiSpec& spec, const TaxiState& st, ActionId action) {
  using taxi::Passenger;
  if (!spec.in_bounds(st.taxi)) throw UsageError("taxi_step: taxi out of bounds");
  if (st.passenger == Passenger::kDelivered) throw UsageError("taxi_step: episode already ended");
  if (action < 0 || action >= static_cast<ActionId>(taxi::kNumActions)) throw UsageError("taxi_step: bad action");

  TaxiState next = st;
  double reward = spec.rewards.step;
  bool done = false;
  static constexpr std::array<std::array<int, 2>, 4> kDelta{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
  switch (action) {
    case taxi::kPickup:
      if (st.passenger == Passenger::kWaiting && st.taxi == spec.passenger_loc) {
        next.passenger = Passenger::kInTaxi;
      } else {
        reward = spec.rewards.illegal;
      }
      break;
    case taxi::kDropoff:
      if (st.passenger == Passenger::kInTaxi && st.taxi == spec.passenger_dest) {
        next.passenger = Passenger::kDelivered;
        reward = spec.rewards.dropoff;
        done = true;
      } else {
        reward = spec.rewards.illegal;
      }
      break;
    default:
      next.taxi = {std::clamp(st.taxi.x + kDelta[action][0], 1, spec.width),
                   std::clamp(st.taxi.y + kDelta[action][1], 1, spec.height)};
  }
  return {taxi_encode(spec, st), action, reward, taxi_encode(spec, next), done};
}

inline void to_json(nlohmann::json& j, const TaxiSpec& t) {
  j = nlohmann::json{{"width", t.width},
                     {"height", t.height},
                     {"taxi_start", {t.taxi_start.x, t.taxi_start.y}},
                     {"passenger_loc", {t.passenger_loc.x, t.passenger_loc.y}},
                     {"passenger_dest", {t.passenger_dest.x, t.passenger_dest.y}},
                     {"rewards", {{"step", t.rewards.step}, {"dropoff", t.rewards.dropoff}, {"illegal", t.rewards.illegal}}}};
}

inline void from_json(const nlohmann::json& j, TaxiSpec& t) {
  t = TaxiSpec{};
  auto cell = [&](const char* key, Cell& c) {
    if (j.contains(key)) c = {j.at(key).at(0).get<int>(), j.at(key).at(1).get<int>()};
  };
  t.width = j.value("width", t.width);
  t.height = j.value("height", t.height);
  cell("taxi_start", t.taxi_start);
  cell("passenger_loc", t.passenger_loc);
  cell("passenger_dest", t.passenger_dest);
  if (j.contains("rewards")) {
    const auto& r = j.at("rewards");
    t.rewards.step = r.value("step", t.rewards.step);
    t.rewards.dropoff = r.value("dropoff", t.rewards.dropoff);
    t.rewards.illegal = r.value("illegal", t.rewards.illegal);
  }
  t.validate();
}

class TaxiEnv final : public Environment {
 public:
  explicit TaxiEnv(TaxiSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const TaxiSpec& spec() const { return spec_; }
  const TaxiState& state() const { return state_; }

  std::string name() const override { return "taxi"; }
  std::size_t n_states() const override { return spec_.n_states(); }
  std::size_t n_actions() const override { return taxi::kNumActions; }
  double max_reward() const override { return std::max({spec_.rewards.step, spec_.rewards.dropoff, spec_.rewards.illegal}); }

  Observation reset(Rng&) override {
    state_ = {spec_.taxi_start, taxi::Passenger::kWaiting};
    return {taxi_encode(spec_, state_), {}};
  }

  StepOutcome step(ActionId action, Rng&) override {
    const TransitionSample t = taxi_step(spec_, state_, action);
    state_ = taxi_decode(spec_, t.next_state);
    return {{t.next_state, {}}, t.reward, t.done, false};
  }

  nlohmann::json frame() const override {
    static constexpr const char* kStatus[] = {"waiting", "in_taxi", "delivered"};
    return {{"env", "taxi"},
            {"width", spec_.width},
            {"height", spec_.height},
            {"taxi", {state_.taxi.x, state_.taxi.y}},
            {"passenger", {spec_.passenger_loc.x, spec_.passenger_loc.y}},
            {"destination", {spec_.passenger_dest.x, spec_.passenger_dest.y}},
            {"status", kStatus[static_cast<int>(state_.passenger)]}};
  }

 private:
  TaxiSpec spec_;
  TaxiState state_{};
};

}  // namespace hitl
