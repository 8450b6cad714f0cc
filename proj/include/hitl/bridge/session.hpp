#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "hitl/bridge/message_log.hpp"

namespace hitl {

struct SessionOptions {
  /// Unanswered prune/label/reward queries fall back to "allow" after this
  /// long. Off by default: stepping blocks until the human answers.
  std::optional<std::chrono::milliseconds> query_timeout;
  /// Frames and metrics wait for a connected client (the run pauses).
  bool pause_when_disconnected = true;
};

/// Transport-independent session state shared by the run loop and the network.
///
/// The run loop calls ask() and publish(); the transport calls connect(),
/// disconnect() and receive(). At most one query is outstanding, and ask()
/// does not return before a reply with the matching step is accepted.
/// Readiness is a latch the client may set at any time; readiness queries
/// read it without blocking.
class SessionCore {
 public:
  using Sender = std::function<void(std::string)>;

  SessionCore(std::shared_ptr<MessageLog> log, SessionOptions options = {})
      : log_(std::move(log)), options_(options) {
    if (!log_) throw ConfigurationError("session needs a message log");
  }

  const std::string& session() const { return log_->session(); }
  const MessageLog& log() const { return *log_; }
  std::shared_ptr<MessageLog> shared_log() const { return log_; }

  /// Extra fields for the hello message (env name, action count, ...).
  void set_hello(nlohmann::json info) {
    std::lock_guard lock(mu_);
    hello_ = std::move(info);
  }

  // Transport side.

  void connect(Sender send) {
    std::lock_guard lock(mu_);
    send_ = std::move(send);
    nlohmann::json hello = hello_;
    hello["type"] = wire::kHello;
    hello["session"] = session();
    hello["step"] = log_->current_step();
    hello["ready"] = ready_;
    send_(hello.dump());
    if (last_frame_) send_(last_frame_->dump());
    if (outstanding_) send_(outstanding_->message.dump());
    cv_.notify_all();
  }

  void disconnect() {
    std::lock_guard lock(mu_);
    send_ = nullptr;
    if (!closed_) spdlog::warn("session {}: client disconnected, run paused", session());
  }

  bool connected() const {
    std::lock_guard lock(mu_);
    return static_cast<bool>(send_);
  }

  void receive(const std::string& text) {
    std::lock_guard lock(mu_);
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
      if (!msg.is_object() || !msg.contains("type")) throw UsageError("message without a type");
    } catch (const std::exception& e) {
      reject(nlohmann::json(), std::string("unreadable message: ") + e.what());
      return;
    }
    const std::string type = msg.at("type").is_string() ? msg.at("type").get<std::string>() : "";
    if (type == wire::kHello) return;
    msg["session"] = session();
    if (type == wire::kReadiness && msg.contains("ready")) {
      ready_ = msg.at("ready").is_boolean() && msg.at("ready").get<bool>();
      log_->write(msg);
      return;
    }
    if (type != wire::kVerdict && type != wire::kRewardOverride) {
      reject(msg, "unexpected message type '" + type + "'");
      return;
    }
    if (!outstanding_) {
      reject(msg, "no outstanding query");
      return;
    }
    const long step = msg.contains("step") && msg.at("step").is_number_integer() ? msg.at("step").get<long>() : -1;
    if (step != outstanding_->step) {
      reject(msg, "step " + std::to_string(step) + " does not match outstanding query " +
                      std::to_string(outstanding_->step));
      return;
    }
    try {
      outstanding_->response = wire::decode_response(msg, outstanding_->kind);
    } catch (const std::exception& e) {
      reject(msg, e.what());
      return;
    }
    log_->write(msg);
    cv_.notify_all();
  }

  /// Liveness ping; not logged.
  void heartbeat() {
    std::lock_guard lock(mu_);
    if (send_) {
      send_(nlohmann::json{{"type", wire::kMetrics}, {"session", session()}, {"heartbeat", true}, {"step", log_->current_step()}}.dump());
    }
  }

  // Run-loop side.

  AdviceResponse ask(const AdviceQuery& q) {
    q.validate();
    std::unique_lock lock(mu_);
    const long step = log_->next_step();
    nlohmann::json msg = wire::encode_query(q, step, session());
    log_->write(msg);
    if (q.kind == QueryKind::kReadiness) {
      AdviceResponse r;
      r.ready = ready_;
      log_->write(wire::encode_response(r, q.kind, step, session()));
      const std::size_t episodes = q.history->episode_returns().size();
      if (send_ && episodes != announced_episodes_) {
        announced_episodes_ = episodes;
        send_(msg.dump());
      }
      return r;
    }
    outstanding_ = Outstanding{step, q.kind, msg, std::nullopt};
    if (send_) send_(msg.dump());
    auto answered = [&] { return outstanding_->response.has_value() || closed_; };
    const bool can_default = q.kind != QueryKind::kActionOverride && q.kind != QueryKind::kStateMap;
    if (options_.query_timeout && can_default) {
      if (!cv_.wait_for(lock, *options_.query_timeout, answered)) {
        AdviceResponse def;
        if (q.kind == QueryKind::kPruneCheck || q.kind == QueryKind::kCatastropheLabel) def.block = false;
        auto reply = wire::encode_response(def, q.kind, step, session());
        reply["timeout"] = true;
        log_->write(reply);
        outstanding_.reset();
        spdlog::info("session {}: query {} timed out, default allow", session(), step);
        return def;
      }
    } else {
      cv_.wait(lock, answered);
    }
    if (closed_ && !outstanding_->response) throw UsageError("session closed with query " + std::to_string(step) + " unanswered");
    AdviceResponse r = *outstanding_->response;
    outstanding_.reset();
    return r;
  }

  /// Sends a frame or metrics message; pauses while no client is connected.
  void publish(nlohmann::json msg) {
    std::unique_lock lock(mu_);
    msg["session"] = session();
    if (!msg.contains("step")) msg["step"] = log_->current_step();
    if (msg.value("type", "") == wire::kStateFrame) last_frame_ = msg;
    if (options_.pause_when_disconnected) cv_.wait(lock, [&] { return static_cast<bool>(send_) || closed_; });
    log_->write(msg);
    if (send_) send_(msg.dump());
  }

  /// Ends the session: wakes any waiter and stops pausing.
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  bool ready() const {
    std::lock_guard lock(mu_);
    return ready_;
  }

  bool has_outstanding() const {
    std::lock_guard lock(mu_);
    return outstanding_.has_value() && !outstanding_->response;
  }

 private:
  struct Outstanding {
    long step;
    QueryKind kind;
    nlohmann::json message;
    std::optional<AdviceResponse> response;
  };

  // Caller holds mu_. The outstanding query is re-sent after the error.
  void reject(const nlohmann::json& msg, const std::string& why) {
    nlohmann::json err{{"type", wire::kError}, {"session", session()}, {"message", why}};
    if (outstanding_) err["step"] = outstanding_->step;
    if (!msg.is_null()) err["rejected"] = msg;
    log_->write(err);
    if (!send_) return;
    send_(err.dump());
    if (outstanding_ && !outstanding_->response) send_(outstanding_->message.dump());
  }

  std::shared_ptr<MessageLog> log_;
  SessionOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  Sender send_;
  nlohmann::json hello_ = nlohmann::json::object();
  std::optional<nlohmann::json> last_frame_;
  std::optional<Outstanding> outstanding_;
  std::size_t announced_episodes_ = static_cast<std::size_t>(-1);
  bool ready_ = false;
  bool closed_ = false;
};

/// Advisor whose answers come from the session's client.
class RemoteAdvisor final : public Advisor {
 public:
  explicit RemoteAdvisor(std::shared_ptr<SessionCore> core) : core_(std::move(core)) {
    if (!core_) throw ConfigurationError("remote advisor without a session");
  }
  AdviceResponse respond(const AdviceQuery& q) override { return core_->ask(q); }

 private:
  std::shared_ptr<SessionCore> core_;
};

}  // namespace hitl
