#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hitl/envs/catcher.hpp"

namespace hitl {

/// Maps a proposed (state, action) to a classifier input.
using FeatureFn = std::function<std::vector<double>(const Observation&, ActionId)>;

/// Catcher features: state, one-hot action, then the velocity the action would
/// produce with its magnitude and square.
///
/// Everything is expressed in the mirror frame where the paddle moves right
/// (or, at rest, the action does not push left). The speed limit is symmetric,
/// so nothing the labeller relies on is lost, and a training set gathered
/// while the paddle only ever raced one way cannot teach the model a direction.
inline FeatureFn catcher_feature_fn(CatcherParams params) {
  return [params](const Observation& obs, ActionId a) {
    CatcherState s = catcher_from_features(obs.features);
    const bool mirror = s.paddle_v < -catcher::kEps || (std::abs(s.paddle_v) <= catcher::kEps && a == catcher::kAccelLeft);
    if (mirror) {
      s.paddle_x = 1.0 - s.paddle_x;
      s.paddle_v = -s.paddle_v;
      s.fruit_x = 1.0 - s.fruit_x;
      if (a != catcher::kCoast) a = a == catcher::kAccelLeft ? catcher::kAccelRight : catcher::kAccelLeft;
    }
    const double v_next = s.paddle_v + velocity_delta(params, a);
    return std::vector<double>{s.paddle_x, s.paddle_v, s.fruit_x, s.fruit_y,
                               a == catcher::kAccelLeft ? 1.0 : 0.0,
                               a == catcher::kAccelRight ? 1.0 : 0.0,
                               a == catcher::kCoast ? 1.0 : 0.0,
                               v_next, std::abs(v_next), v_next * v_next};
  };
}

}  // namespace hitl
