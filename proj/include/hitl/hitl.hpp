#pragma once

// Everything except the WebSocket transport (hitl/bridge/server.hpp,
// hitl/bridge/serve.hpp), which pulls in Boost.

#include "hitl/agents/q_learning.hpp"
#include "hitl/agents/rmax.hpp"
#include "hitl/agents/scripted.hpp"
#include "hitl/blocker/blocker.hpp"
#include "hitl/bridge/message_log.hpp"
#include "hitl/bridge/session.hpp"
#include "hitl/envs/compile.hpp"
#include "hitl/harness/summary.hpp"
#include "hitl/mdp/io.hpp"
#include "hitl/mdp/random_mdp.hpp"
#include "hitl/protocols/beta_q.hpp"
#include "hitl/protocols/reward.hpp"
#include "hitl/protocols/simulation.hpp"
#include "hitl/protocols/state_map.hpp"
