#pragma once

#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hitl/bridge/messages.hpp"

namespace hitl {

/// JSON-lines session log. Hands out the strictly increasing step numbers
/// that tie each advisor query to its reply.
class MessageLog {
 public:
  explicit MessageLog(std::string session, std::ostream* out = nullptr) : session_(std::move(session)), out_(out) {}

  const std::string& session() const { return session_; }
  long next_step() {
    std::lock_guard lock(mu_);
    return ++step_;
  }
  long current_step() const {
    std::lock_guard lock(mu_);
    return step_;
  }

  void write(const nlohmann::json& message) {
    std::lock_guard lock(mu_);
    if (out_) *out_ << message.dump() << '\n';
  }

 private:
  std::string session_;
  std::ostream* out_;
  mutable std::mutex mu_;
  long step_ = 0;
};

/// Passes queries through to `inner` and logs each query and reply.
class LoggingAdvisor final : public Advisor {
 public:
  LoggingAdvisor(std::shared_ptr<Advisor> inner, std::shared_ptr<MessageLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {
    if (!inner_ || !log_) throw ConfigurationError("logging advisor needs an advisor and a log");
  }

  AdviceResponse respond(const AdviceQuery& q) override {
    const long step = log_->next_step();
    log_->write(wire::encode_query(q, step, log_->session()));
    const AdviceResponse r = inner_->respond(q);
    const auto reply = wire::encode_response(r, q.kind, step, log_->session());
    log_->write(reply);
    // Hand back exactly what a replay of the log would produce.
    return wire::decode_response(reply, q.kind);
  }

 private:
  std::shared_ptr<Advisor> inner_;
  std::shared_ptr<MessageLog> log_;
};

/// Scripted advisor that answers from a recorded session log. Queries must
/// arrive in the recorded order; any divergence is a usage error.
class ReplayAdvisor final : public Advisor {
 public:
  explicit ReplayAdvisor(const std::vector<std::string>& lines) {
    std::optional<nlohmann::json> pending;
    for (const auto& line : lines) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.value("type", "");
      if (j.contains("query")) {
        pending = j;  // a re-sent query replaces the earlier copy
        continue;
      }
      const bool readiness_query = pending && pending->at("query") == to_string(QueryKind::kReadiness);
      const bool reply = readiness_query ? (type == wire::kReadiness && j.contains("ready"))
                                         : (type == wire::kVerdict || type == wire::kRewardOverride);
      if (reply && pending && j.value("step", -1L) == pending->at("step").get<long>()) {
        exchanges_.push_back({*pending, j});
        pending.reset();
      }
    }
  }

  static std::shared_ptr<ReplayAdvisor> from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open message log " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return std::make_shared<ReplayAdvisor>(lines);
  }

  AdviceResponse respond(const AdviceQuery& q) override {
    if (exchanges_.empty()) throw UsageError("replay: log exhausted at a " + std::string(to_string(q.kind)) + " query");
    const auto [query, reply] = exchanges_.front();
    exchanges_.pop_front();
    const long step = query.at("step").get<long>();
    if (query.at("query").get<std::string>() != to_string(q.kind)) {
      throw UsageError("replay diverged at step " + std::to_string(step) + ": recorded " +
                       query.at("query").get<std::string>() + ", asked " + to_string(q.kind));
    }
    if (q.kind != QueryKind::kReadiness && query.value("state", q.state.state) != q.state.state) {
      throw UsageError("replay diverged at step " + std::to_string(step) + ": state mismatch");
    }
    return wire::decode_response(reply, q.kind);
  }

  std::size_t remaining() const { return exchanges_.size(); }

 private:
  std::deque<std::pair<nlohmann::json, nlohmann::json>> exchanges_;
};

}  // namespace hitl
