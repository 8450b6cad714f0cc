#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "hitl/bridge/session.hpp"

namespace hitl {

/// WebSocket transport for one SessionCore. Serves a single client at a time
/// on its own I/O thread; further connections are refused with an error.
class WebSocketServer {
 public:
  WebSocketServer(std::shared_ptr<SessionCore> core, unsigned short port, const std::string& address = "127.0.0.1",
                  std::chrono::milliseconds heartbeat = std::chrono::seconds(5))
      : core_(std::move(core)),
        acceptor_(ioc_, {boost::asio::ip::make_address(address), port}),
        timer_(ioc_),
        heartbeat_(heartbeat) {}

  ~WebSocketServer() { stop(); }

  /// Bound port (useful when constructed with port 0).
  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    accept();
    tick();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  /// Flushes queued messages, closes the client's WebSocket and joins the
  /// network thread. Gives up on an unresponsive client after `grace`.
  void stop(std::chrono::milliseconds grace = std::chrono::seconds(2)) {
    if (!thread_.joinable()) return;
    auto drained = std::make_shared<std::promise<void>>();
    std::future<void> done = drained->get_future();
    boost::asio::post(ioc_, [this, drained] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      timer_.cancel();
      if (active_) {
        active_->finish([drained] { drained->set_value(); });
      } else {
        drained->set_value();
      }
    });
    done.wait_for(grace);
    ioc_.stop();
    thread_.join();
  }

 private:
  using Socket = boost::asio::ip::tcp::socket;
  using Stream = boost::beast::websocket::stream<Socket>;

  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(WebSocketServer& server, Socket socket) : server_(server), ws_(std::move(socket)) {}

    void start(bool refuse) {
      ws_.text(true);
      ws_.async_accept([self = shared_from_this(), refuse](boost::beast::error_code ec) {
        if (ec) return;
        if (refuse) {
          self->close_code_ = boost::beast::websocket::close_code::try_again_later;
          self->send(nlohmann::json{{"type", wire::kError}, {"message", "session already has a client"}}.dump());
          self->closing_ = true;
          return;
        }
        self->server_.core_->connect([weak = std::weak_ptr<Connection>(self)](std::string msg) {
          if (auto c = weak.lock()) c->send(std::move(msg));
        });
        self->read();
      });
    }

    void send(std::string msg) {
      boost::asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)]() mutable {
        self->queue_.push_back(std::move(msg));
        if (self->queue_.size() == 1) self->write();
      });
    }

    /// Closes once everything queued so far is written; `on_closed` runs after.
    void finish(std::function<void()> on_closed) {
      on_closed_ = std::move(on_closed);
      closing_ = true;
      if (queue_.empty()) shut();
    }

   private:
    void read() {
      ws_.async_read(buffer_, [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
        if (ec) {
          self->server_.core_->disconnect();
          if (self->server_.active_ == self) self->server_.active_.reset();
          self->closed();
          return;
        }
        const std::string text = boost::beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->server_.core_->receive(text);
        self->read();
      });
    }

    void write() {
      ws_.async_write(boost::asio::buffer(queue_.front()), [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
        if (ec) {
          self->closed();
          return;
        }
        self->queue_.pop_front();
        if (!self->queue_.empty()) {
          self->write();
        } else if (self->closing_) {
          self->shut();
        }
      });
    }

    void shut() {
      if (shut_) return;
      shut_ = true;
      ws_.async_close(close_code_, [self = shared_from_this()](boost::beast::error_code) { self->closed(); });
    }

    void closed() {
      if (auto f = std::exchange(on_closed_, nullptr)) f();
    }

    WebSocketServer& server_;
    Stream ws_;
    boost::beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    bool closing_ = false;
    bool shut_ = false;
    boost::beast::websocket::close_code close_code_ = boost::beast::websocket::close_code::normal;
    std::function<void()> on_closed_;
  };

  void accept() {
    acceptor_.async_accept([this](boost::beast::error_code ec, Socket socket) {
      if (ec) return;
      // One small message per round trip; Nagle would stall each by a delayed ACK.
      socket.set_option(boost::asio::ip::tcp::no_delay(true), ec);
      auto conn = std::make_shared<Connection>(*this, std::move(socket));
      const bool refuse = static_cast<bool>(active_);
      if (!refuse) active_ = conn;
      conn->start(refuse);
      accept();
    });
  }

  void tick() {
    timer_.expires_after(heartbeat_);
    timer_.async_wait([this](boost::beast::error_code ec) {
      if (ec) return;
      core_->heartbeat();
      tick();
    });
  }

  std::shared_ptr<SessionCore> core_;
  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  boost::asio::steady_timer timer_;
  std::chrono::milliseconds heartbeat_;
  std::shared_ptr<Connection> active_;
  std::thread thread_;
};

}  // namespace hitl
