#pragma once

#include <cmath>
#include <string>

#include "hitl/envs/catcher.hpp"
#include "hitl/envs/lava_grid.hpp"
#include "hitl/envs/taxi.hpp"
#include "hitl/mdp/mdp.hpp"

namespace hitl {

struct CompileOptions {
  /// Dense transition tables grow as states^2 * actions; refuse beyond this.
  std::size_t max_states = 2000;
  double gamma = 0.95;
};

class StateSpaceTooLarge : public ConfigurationError {
 public:
  StateSpaceTooLarge(std::string env, std::size_t size, std::size_t cap)
      : ConfigurationError(env + " compiles to " + std::to_string(size) + " states, above the cap of " +
                           std::to_string(cap)),
        size_(size) {}
  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
};

namespace detail {

inline MdpSpec empty_mdp(std::size_t n, std::size_t m, double gamma) {
  MdpSpec mdp;
  mdp.n_states = n;
  mdp.n_actions = m;
  mdp.gamma = gamma;
  mdp.transition.assign(n, std::vector<std::vector<double>>(m, std::vector<double>(n, 0.0)));
  mdp.reward.assign(n, std::vector<double>(m, 0.0));
  mdp.start.assign(n, 0.0);
  return mdp;
}

inline void make_absorbing(MdpSpec& mdp, StateId s) {
  mdp.terminal.insert(s);
  for (std::size_t a = 0; a < mdp.n_actions; ++a) {
    mdp.transition[s][a].assign(mdp.n_states, 0.0);
    mdp.transition[s][a][s] = 1.0;
    mdp.reward[s][a] = 0.0;
  }
}

}  // namespace detail

inline MdpSpec compile_to_mdp(const GridSpec& spec, const CompileOptions& opts = {}) {
  spec.validate();
  const std::size_t n = spec.n_states();
  if (n > opts.max_states) throw StateSpaceTooLarge("lavagrid", n, opts.max_states);
  MdpSpec mdp = detail::empty_mdp(n, lava::kNumActions, opts.gamma);
  for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
    const Cell c = spec.cell(s);
    if (spec.is_terminal(c)) {
      detail::make_absorbing(mdp, s);
      continue;
    }
    for (ActionId a = 0; a < static_cast<ActionId>(lava::kNumActions); ++a) {
      const TransitionSample t = lavagrid_step(spec, c, a);
      mdp.transition[s][a][t.next_state] = 1.0;
      mdp.reward[s][a] = t.reward;
    }
  }
  mdp.start[spec.id(spec.start)] = 1.0;
  return mdp;
}

inline MdpSpec compile_to_mdp(const TaxiSpec& spec, const CompileOptions& opts = {}) {
  spec.validate();
  const std::size_t n = spec.n_states();
  if (n > opts.max_states) throw StateSpaceTooLarge("taxi", n, opts.max_states);
  MdpSpec mdp = detail::empty_mdp(n, taxi::kNumActions, opts.gamma);
  for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
    const TaxiState st = taxi_decode(spec, s);
    if (st.passenger == taxi::Passenger::kDelivered) {
      detail::make_absorbing(mdp, s);
      continue;
    }
    for (ActionId a = 0; a < static_cast<ActionId>(taxi::kNumActions); ++a) {
      const TransitionSample t = taxi_step(spec, st, a);
      mdp.transition[s][a][t.next_state] = 1.0;
      mdp.reward[s][a] = t.reward;
    }
  }
  mdp.start[taxi_encode(spec, {spec.taxi_start, taxi::Passenger::kWaiting})] = 1.0;
  return mdp;
}

/// Exact lattice encoding of Catcher: paddle x and velocity on the accel grid,
/// fruit x on the respawn grid, fruit height on the fall-rate grid.
class CatcherLattice {
 public:
  explicit CatcherLattice(const CatcherParams& p) : p_(p) {
    p_.validate();
    auto steps = [](double span, double unit, const char* what) {
      const double k = span / unit;
      if (std::abs(k - std::round(k)) > 1e-9) {
        throw ConfigurationError(std::string("catcher lattice: ") + what + " is not a multiple of its step");
      }
      return static_cast<int>(std::lround(k));
    };
    positions_ = steps(1.0, p_.accel, "unit width") + 1;
    v_max_ = steps(p_.v_cap, p_.accel, "v_cap");
    heights_ = steps(1.0, p_.fall_rate, "unit height");
    steps(0.5, p_.accel, "paddle start");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(positions_) * (2 * v_max_ + 1) * p_.fruit_positions * heights_;
  }

  StateId encode(const CatcherState& s) const {
    const int pi = static_cast<int>(std::lround(s.paddle_x / p_.accel));
    const int vi = static_cast<int>(std::lround(s.paddle_v / p_.accel)) + v_max_;
    const int fi = static_cast<int>(std::lround(s.fruit_x * (p_.fruit_positions - 1)));
    const int yi = static_cast<int>(std::lround((1.0 - s.fruit_y) / p_.fall_rate));
    return static_cast<StateId>(((pi * (2 * v_max_ + 1) + vi) * p_.fruit_positions + fi) * heights_ + yi);
  }

  CatcherState decode(StateId id) const {
    int rest = id;
    const int yi = rest % heights_;
    rest /= heights_;
    const int fi = rest % p_.fruit_positions;
    rest /= p_.fruit_positions;
    const int vi = rest % (2 * v_max_ + 1);
    const int pi = rest / (2 * v_max_ + 1);
    return {pi * p_.accel, (vi - v_max_) * p_.accel, static_cast<double>(fi) / (p_.fruit_positions - 1),
            1.0 - yi * p_.fall_rate};
  }

 private:
  CatcherParams p_;
  int positions_ = 0;
  int v_max_ = 0;
  int heights_ = 0;
};

/// Catcher on its exact lattice. Continuing task: no terminal states.
inline MdpSpec compile_to_mdp(const CatcherParams& params, const CompileOptions& opts = {}) {
  const CatcherLattice lattice(params);
  const std::size_t n = lattice.size();
  if (n > opts.max_states) throw StateSpaceTooLarge("catcher", n, opts.max_states);
  MdpSpec mdp = detail::empty_mdp(n, catcher::kNumActions, opts.gamma);
  const double respawn_p = 1.0 / params.fruit_positions;
  Rng unused(0);
  for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
    const CatcherState st = lattice.decode(s);
    for (ActionId a = 0; a < static_cast<ActionId>(catcher::kNumActions); ++a) {
      const CatcherStep r = catcher_step(params, st, a, unused);
      mdp.reward[s][a] = r.reward;
      if (r.caught || r.missed) {
        CatcherState next = r.next;
        for (int f = 0; f < params.fruit_positions; ++f) {
          next.fruit_x = static_cast<double>(f) / (params.fruit_positions - 1);
          mdp.transition[s][a][lattice.encode(next)] += respawn_p;
        }
      } else {
        mdp.transition[s][a][lattice.encode(r.next)] = 1.0;
      }
    }
  }
  for (int f = 0; f < params.fruit_positions; ++f) {
    mdp.start[lattice.encode({0.5, 0.0, static_cast<double>(f) / (params.fruit_positions - 1), 1.0})] += respawn_p;
  }
  return mdp;
}

}  // namespace hitl
