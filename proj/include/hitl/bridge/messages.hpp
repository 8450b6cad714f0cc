#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "hitl/protocols/advice.hpp"

namespace hitl::wire {

/// Session message types. Every message is one JSON object without newlines.
inline constexpr const char* kHello = "hello";
inline constexpr const char* kProposal = "proposal";
inline constexpr const char* kVerdict = "verdict";
inline constexpr const char* kRewardOverride = "reward_override";
inline constexpr const char* kReadiness = "readiness";
inline constexpr const char* kStateFrame = "state_frame";
inline constexpr const char* kMetrics = "metrics";
inline constexpr const char* kError = "error";

inline QueryKind kind_from_string(const std::string& s) {
  for (QueryKind k : {QueryKind::kPruneCheck, QueryKind::kRewardOverride, QueryKind::kActionOverride,
                      QueryKind::kReadiness, QueryKind::kStateMap, QueryKind::kCatastropheLabel}) {
    if (s == to_string(k)) return k;
  }
  throw UsageError("unknown query kind '" + s + "'");
}

/// Outgoing advisor query: `readiness` for readiness checks, `proposal` otherwise.
inline nlohmann::json encode_query(const AdviceQuery& q, long step, const std::string& session) {
  nlohmann::json j{{"session", session}, {"step", step}, {"query", to_string(q.kind)}};
  if (q.kind == QueryKind::kReadiness) {
    j["type"] = kReadiness;
    j["history_len"] = q.history ? q.history->size() : 0;
    j["episodes"] = q.history ? q.history->episode_returns().size() : 0;
    if (q.history && !q.history->episode_returns().empty()) j["last_return"] = q.history->episode_returns().back();
    return j;
  }
  j["type"] = kProposal;
  j["state"] = q.state.state;
  if (!q.state.features.empty()) j["features"] = q.state.features;
  if (q.proposed != kNoAction) j["action"] = q.proposed;
  if (q.reward) j["reward"] = *q.reward;
  return j;
}

/// Reply to a query of `kind`, in the message type the console would send.
inline nlohmann::json encode_response(const AdviceResponse& r, QueryKind kind, long step, const std::string& session) {
  nlohmann::json j{{"session", session}, {"step", step}};
  switch (kind) {
    case QueryKind::kPruneCheck:
    case QueryKind::kCatastropheLabel:
      j["type"] = kVerdict;
      j["decision"] = r.block.value_or(false) ? "block" : "allow";
      break;
    case QueryKind::kActionOverride:
      j["type"] = kVerdict;
      j["decision"] = "override";
      j["action"] = r.action.value_or(kNoAction);
      break;
    case QueryKind::kStateMap:
      j["type"] = kVerdict;
      j["decision"] = "map";
      if (r.state) j["state"] = *r.state;
      break;
    case QueryKind::kRewardOverride:
      if (r.reward) {
        j["type"] = kRewardOverride;
        j["reward"] = *r.reward;
      } else {
        j["type"] = kVerdict;
        j["decision"] = "allow";
      }
      break;
    case QueryKind::kReadiness:
      j["type"] = kReadiness;
      j["ready"] = r.ready.value_or(false);
      break;
  }
  return j;
}

/// Parses a reply to a query of `kind`. Throws UsageError on a type that
/// cannot answer that kind.
inline AdviceResponse decode_response(const nlohmann::json& j, QueryKind kind) {
  const std::string type = j.at("type").get<std::string>();
  AdviceResponse r;
  if (kind == QueryKind::kReadiness) {
    if (type != kReadiness) throw UsageError("expected a readiness reply, got " + type);
    r.ready = j.at("ready").get<bool>();
    return r;
  }
  if (kind == QueryKind::kRewardOverride && type == kRewardOverride) {
    r.reward = j.at("reward").get<double>();
    return r;
  }
  if (type != kVerdict) throw UsageError("expected a verdict, got " + type);
  const std::string decision = j.value("decision", std::string("allow"));
  switch (kind) {
    case QueryKind::kPruneCheck:
    case QueryKind::kCatastropheLabel:
      if (decision != "block" && decision != "allow") throw UsageError("verdict decision must be allow or block");
      r.block = decision == "block";
      break;
    case QueryKind::kActionOverride:
      r.action = j.at("action").get<ActionId>();
      break;
    case QueryKind::kStateMap:
      if (j.contains("state")) r.state = j.at("state").get<StateId>();
      break;
    default:
      break;
  }
  return r;
}

}  // namespace hitl::wire
