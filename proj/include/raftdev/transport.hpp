// Copyright 2026 The raftdev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RAFTDEV_TRANSPORT_HPP_
#define RAFTDEV_TRANSPORT_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "raftdev/net.hpp"
#include "raftdev/uid.hpp"
#include "raftdev/wire.hpp"

// Request/response plumbing over newline-delimited JSON on persistent TCP
// connections: one connection per (caller, target) pair, reconnected lazily,
// responses correlated to callers by msgId. Fan-out helpers run calls in
// parallel and deliver outcomes as they arrive.

namespace raftdev {

enum class CallErrorKind { None, Timeout, Connection, Decode };

inline const char* to_string(CallErrorKind k) {
  switch (k) {
    case CallErrorKind::None: return "none";
    case CallErrorKind::Timeout: return "timeout";
    case CallErrorKind::Connection: return "connection";
    case CallErrorKind::Decode: return "decode";
  }
  return "?";
}

struct CallResult {
  std::optional<Message> response;
  CallErrorKind error = CallErrorKind::None;
  std::string error_detail;

  bool ok() const { return response.has_value(); }
};

using CallCallback = std::function<void(CallResult)>;

class Transport {
 public:
  explicit Transport(std::string local_name = "client")
      : local_name_(std::move(local_name)) {
    sweeper_ = std::thread([this] { sweep_loop(); });
  }

  ~Transport() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    sweep_cv_.notify_all();
    sweeper_.join();
    std::map<std::string, std::shared_ptr<Conn>> conns;
    std::vector<std::shared_ptr<Conn>> zombies;
    {
      std::lock_guard lock(mu_);
      conns.swap(conns_);
      zombies.swap(zombies_);
    }
    for (auto& [addr, conn] : conns) shutdown_conn(*conn);
    for (auto& [addr, conn] : conns)
      if (conn->reader.joinable()) conn->reader.join();
    for (auto& z : zombies)
      if (z->reader.joinable()) z->reader.join();
  }

  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  /// Sends `body` to `target` and delivers exactly one outcome to `cb`: the
  /// correlated response, or a timeout/connection/decode error. The callback
  /// runs on a transport thread; it must not block for long.
  void call_async(const std::string& target, MessageBody body, int timeout_ms,
                  CallCallback cb) {
    std::string msg_id = raftdev::next_msg_id();
    Message msg{msg_id, local_name_, std::move(body)};
    std::shared_ptr<Conn> conn = get_conn(target);
    if (!conn) {
      cb(CallResult{std::nullopt, CallErrorKind::Connection,
                    "connect to " + target + " failed: " + last_connect_error_});
      return;
    }
    auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    {
      std::lock_guard lock(conn->mu);
      if (conn->dead) {
        cb(CallResult{std::nullopt, CallErrorKind::Connection, "connection died"});
        return;
      }
      conn->outstanding.emplace(msg_id, PendingCall{std::move(cb), deadline});
    }
    std::string frame = wire::encode(msg);
    bool ok;
    {
      std::lock_guard wlock(conn->write_mu);
      ok = net::write_all(conn->fd.get(), frame.data(), frame.size());
    }
    if (!ok) {
      fail_conn(target, conn, CallErrorKind::Connection, "write failed");
    }
  }

  /// Blocking form of call_async.
  CallResult call(const std::string& target, MessageBody body, int timeout_ms) {
    auto promise = std::make_shared<std::promise<CallResult>>();
    auto future = promise->get_future();
    call_async(target, std::move(body), timeout_ms,
               [promise](CallResult r) { promise->set_value(std::move(r)); });
    return future.get();
  }

  /// One-way notification; no response is expected or correlated.
  bool notify(const std::string& target, MessageBody body) {
    Message msg{raftdev::next_msg_id(), local_name_, std::move(body)};
    std::shared_ptr<Conn> conn = get_conn(target);
    if (!conn) return false;
    std::string frame = wire::encode(msg);
    std::lock_guard wlock(conn->write_mu);
    return net::write_all(conn->fd.get(), frame.data(), frame.size());
  }

  /// Parallel fan-out: one outcome per target, delivered as it arrives.
  /// Per-target failures do not disturb the remaining calls.
  void broadcast_parallel(
      const std::vector<std::string>& targets, const MessageBody& body,
      int timeout_ms,
      const std::function<void(const std::string&, CallResult)>& cb) {
    if (targets.empty())
      throw std::invalid_argument("broadcast requires at least one target");
    for (const auto& target : targets) {
      call_async(target, body, timeout_ms,
                 [cb, target](CallResult r) { cb(target, std::move(r)); });
    }
  }

  /// Gathering form: outcomes in arrival order.
  std::vector<std::pair<std::string, CallResult>> broadcast_gather(
      const std::vector<std::string>& targets, const MessageBody& body,
      int timeout_ms) {
    struct Gather {
      std::mutex mu;
      std::condition_variable cv;
      std::vector<std::pair<std::string, CallResult>> results;
    };
    auto gather = std::make_shared<Gather>();
    broadcast_parallel(targets, body, timeout_ms,
                       [gather](const std::string& target, CallResult r) {
                         std::lock_guard lock(gather->mu);
                         gather->results.emplace_back(target, std::move(r));
                         gather->cv.notify_all();
                       });
    std::unique_lock lock(gather->mu);
    gather->cv.wait(lock, [&] { return gather->results.size() == targets.size(); });
    return gather->results;
  }

  /// Drops the cached connection (next call reconnects).
  void forget(const std::string& target) {
    std::shared_ptr<Conn> conn;
    {
      std::lock_guard lock(mu_);
      auto it = conns_.find(target);
      if (it == conns_.end()) return;
      conn = it->second;
      conns_.erase(it);
    }
    shutdown_conn(*conn);
    std::lock_guard lock(mu_);
    zombies_.push_back(conn);
  }

 private:
  struct PendingCall {
    CallCallback cb;
    std::chrono::steady_clock::time_point deadline;
  };

  struct Conn {
    net::Fd fd;
    std::thread reader;
    std::mutex write_mu;
    std::mutex mu;
    bool dead = false;
    std::map<std::string, PendingCall> outstanding;
  };

  std::shared_ptr<Conn> get_conn(const std::string& target) {
    {
      std::lock_guard lock(mu_);
      auto it = conns_.find(target);
      if (it != conns_.end()) return it->second;
      // A peer that just refused or dropped us is not retried on every send;
      // the periodic caller (heartbeat cadence) probes it again after the
      // backoff window.
      auto down = down_until_.find(target);
      if (down != down_until_.end()) {
        if (std::chrono::steady_clock::now() < down->second) {
          last_connect_error_ = "in reconnect backoff";
          return nullptr;
        }
        down_until_.erase(down);
      }
    }
    std::string error;
    net::Fd fd = net::tcp_connect(target, connect_timeout_ms_, &error);
    if (!fd.valid()) {
      std::lock_guard lock(mu_);
      last_connect_error_ = error;
      down_until_[target] = std::chrono::steady_clock::now() +
                            std::chrono::milliseconds(reconnect_backoff_ms_);
      return nullptr;
    }
    auto conn = std::make_shared<Conn>();
    conn->fd = std::move(fd);
    std::lock_guard lock(mu_);
    auto [it, inserted] = conns_.emplace(target, conn);
    if (!inserted) return it->second;  // lost a race, reuse the winner
    conn->reader = std::thread([this, target, conn] { read_loop(target, conn); });
    return conn;
  }

  void read_loop(const std::string& target, std::shared_ptr<Conn> conn) {
    net::LineReader reader(conn->fd.get());
    while (true) {
      auto line = reader.next();
      if (!line) {
        fail_conn(target, conn, CallErrorKind::Connection, "connection closed");
        return;
      }
      std::string error;
      auto msg = wire::decode(*line, &error);
      if (!msg) {
        fail_conn(target, conn, CallErrorKind::Decode, error);
        return;
      }
      CallCallback cb;
      {
        std::lock_guard lock(conn->mu);
        auto it = conn->outstanding.find(msg->msg_id);
        if (it == conn->outstanding.end()) continue;  // late or unsolicited
        cb = std::move(it->second.cb);
        conn->outstanding.erase(it);
      }
      cb(CallResult{std::move(msg), CallErrorKind::None, ""});
    }
  }

  void fail_conn(const std::string& target, const std::shared_ptr<Conn>& conn,
                 CallErrorKind kind, const std::string& detail) {
    std::vector<CallCallback> cbs;
    {
      std::lock_guard lock(conn->mu);
      if (conn->dead) return;
      conn->dead = true;
      for (auto& [id, pending] : conn->outstanding)
        cbs.push_back(std::move(pending.cb));
      conn->outstanding.clear();
    }
    conn->fd.shutdown_both();
    {
      std::lock_guard lock(mu_);
      auto it = conns_.find(target);
      if (it != conns_.end() && it->second == conn) {
        zombies_.push_back(conn);
        conns_.erase(it);
      }
    }
    for (auto& cb : cbs) cb(CallResult{std::nullopt, kind, detail});
  }

  void shutdown_conn(Conn& conn) {
    std::vector<CallCallback> cbs;
    {
      std::lock_guard lock(conn.mu);
      conn.dead = true;
      for (auto& [id, pending] : conn.outstanding)
        cbs.push_back(std::move(pending.cb));
      conn.outstanding.clear();
    }
    conn.fd.shutdown_both();
    for (auto& cb : cbs)
      cb(CallResult{std::nullopt, CallErrorKind::Connection, "transport closed"});
  }

  void sweep_loop() {
    std::unique_lock lock(mu_);
    while (!stopping_) {
      sweep_cv_.wait_for(lock, std::chrono::milliseconds(20));
      if (stopping_) break;
      auto now = std::chrono::steady_clock::now();
      std::vector<CallCallback> expired;
      for (auto& [target, conn] : conns_) {
        std::lock_guard clock(conn->mu);
        for (auto it = conn->outstanding.begin();
             it != conn->outstanding.end();) {
          if (it->second.deadline <= now) {
            expired.push_back(std::move(it->second.cb));
            it = conn->outstanding.erase(it);
          } else {
            ++it;
          }
        }
      }
      std::vector<std::shared_ptr<Conn>> zombies;
      zombies.swap(zombies_);
      lock.unlock();
      // reap finished reader threads of failed connections
      for (auto& z : zombies)
        if (z->reader.joinable()) z->reader.join();
      for (auto& cb : expired)
        cb(CallResult{std::nullopt, CallErrorKind::Timeout, "request timed out"});
      lock.lock();
    }
  }

  std::string local_name_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Conn>> conns_;
  std::vector<std::shared_ptr<Conn>> zombies_;
  std::string last_connect_error_;
  std::map<std::string, std::chrono::steady_clock::time_point> down_until_;
  int connect_timeout_ms_ = 1000;
  int reconnect_backoff_ms_ = 200;
  bool stopping_ = false;
  std::condition_variable sweep_cv_;
  std::thread sweeper_;
};

/// Accepts newline-framed JSON request streams and feeds each decoded message
/// to the handler; a returned message is written back on the same connection
/// (with the request's msgId, set by the handler).
class MessageServer {
 public:
  using Handler = std::function<std::optional<Message>(const Message&)>;

  MessageServer(const std::string& bind_address, Handler handler)
      : handler_(std::move(handler)) {
    listen_fd_ = net::tcp_listen(bind_address);
    address_ = net::local_address(listen_fd_.get());
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ~MessageServer() { stop(); }

  MessageServer(const MessageServer&) = delete;
  MessageServer& operator=(const MessageServer&) = delete;

  /// Actual bound address (resolves port 0).
  const std::string& address() const { return address_; }

  std::uint64_t malformed_frames() const { return malformed_.load(); }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    listen_fd_.shutdown_both();
    accept_thread_.join();
    std::vector<std::shared_ptr<ConnState>> conns;
    {
      std::lock_guard lock(mu_);
      conns.assign(conns_.begin(), conns_.end());
    }
    for (auto& c : conns) c->fd.shutdown_both();
    for (auto& c : conns)
      if (c->worker.joinable()) c->worker.join();
    listen_fd_.reset();
  }

 private:
  struct ConnState {
    net::Fd fd;
    std::thread worker;
  };

  void accept_loop() {
    while (!stopping_) {
      sockaddr_in peer{};
      socklen_t len = sizeof(peer);
      int cfd = ::accept(listen_fd_.get(), reinterpret_cast<sockaddr*>(&peer),
                         &len);
      if (cfd < 0) {
        if (stopping_) return;
        if (errno == EINTR) continue;
        return;
      }
      int one = 1;
      ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      auto state = std::make_shared<ConnState>();
      state->fd = net::Fd(cfd);
      {
        std::lock_guard lock(mu_);
        conns_.push_back(state);
      }
      state->worker = std::thread([this, state] { serve(state); });
    }
  }

  void serve(std::shared_ptr<ConnState> state) {
    net::LineReader reader(state->fd.get());
    while (!stopping_) {
      auto line = reader.next();
      if (!line) break;
      if (line->empty()) continue;
      std::string error;
      auto msg = wire::decode(*line, &error);
      if (!msg) {
        malformed_.fetch_add(1);
        break;  // protocol corruption: drop the connection
      }
      auto response = handler_(*msg);
      if (response) {
        std::string frame = wire::encode(*response);
        if (!net::write_all(state->fd.get(), frame.data(), frame.size())) break;
      }
    }
    state->fd.shutdown_both();
  }

  Handler handler_;
  net::Fd listen_fd_;
  std::string address_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> malformed_{0};
  std::mutex mu_;
  std::vector<std::shared_ptr<ConnState>> conns_;
};

}  // namespace raftdev

#endif  // RAFTDEV_TRANSPORT_HPP_
