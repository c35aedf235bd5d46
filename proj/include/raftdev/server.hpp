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

#ifndef RAFTDEV_SERVER_HPP_
#define RAFTDEV_SERVER_HPP_

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "raftdev/core.hpp"
#include "raftdev/discovery.hpp"
#include "raftdev/state_machine.hpp"
#include "raftdev/transport.hpp"

namespace raftdev {

struct ServerOptions {
  std::string listen_address = "127.0.0.1:0";
  std::string endpoint_id;  // derived from the bound address when empty
  std::string mcast_group = "239.255.255.250";
  std::uint16_t mcast_port = 3702;
  bool announce = true;  // join discovery and send Hello/Bye

  // Managed servers wait for AssignConfig/Start from a benchmark manager;
  // unmanaged ones run raft immediately against static or discovered peers.
  bool managed = false;
  std::vector<std::string> static_peers;
  // Experimental: membership follows discovery events, so the majority moves
  // with the peer table. Unsafe under partitions; benchmarks pin peers.
  bool dynamic_membership = false;

  int election_timeout_min_ms = 150;
  int election_timeout_max_ms = 300;
  int heartbeat_period_ms = 50;
  bool heartbeat_uses_election_timeout = false;  // paper-fidelity cadence
  int peer_call_timeout_ms = 1000;
  std::uint64_t rng_seed = std::random_device{}();
  std::string journal_path;  // optional apply journal
};

/// One replicated-service device: raft core, key-value state machine,
/// transport endpoint and discovery announcer, glued by a serialized event
/// queue (all core access happens on the queue thread).
class ServerRuntime {
 public:
  explicit ServerRuntime(ServerOptions options) : options_(std::move(options)) {
    server_ = std::make_unique<MessageServer>(
        options_.listen_address,
        [this](const Message& m) { return handle_message(m); });
    address_ = server_->address();
    if (options_.endpoint_id.empty())
      options_.endpoint_id = "urn:raftdev:" + address_;
    transport_ = std::make_unique<Transport>(address_);
    sm_ = options_.journal_path.empty()
              ? std::make_unique<KvStateMachine>()
              : std::make_unique<KvStateMachine>(options_.journal_path);
    loop_ = std::thread([this] { event_loop(); });
    if (options_.announce) {
      DiscoveryConfig dc;
      dc.group = options_.mcast_group;
      dc.port = options_.mcast_port;
      dc.endpoint_id = options_.endpoint_id;
      dc.service_address = address_;
      discovery_ = std::make_unique<DiscoveryAgent>(
          dc, [this](const Message& m, std::int64_t now) {
            post([this, m, now] { on_discovery_event(m, now); });
          });
      discovery_->announce_hello();
    }
    if (!options_.managed) {
      post([this] {
        make_core(options_.static_peers, options_.election_timeout_min_ms,
                  options_.election_timeout_max_ms);
        perform(core_->start());
      });
    }
  }

  ~ServerRuntime() { stop(); }

  ServerRuntime(const ServerRuntime&) = delete;
  ServerRuntime& operator=(const ServerRuntime&) = delete;

  const std::string& address() const { return address_; }
  const std::string& endpoint_id() const { return options_.endpoint_id; }

  /// Blocks until a Shutdown control message arrives.
  void wait_shutdown() {
    std::unique_lock lock(mu_);
    shutdown_cv_.wait(lock, [this] { return shutdown_requested_; });
  }

  bool shutdown_requested() const {
    std::lock_guard lock(mu_);
    return shutdown_requested_;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    // Graceful exit leaves the cluster politely.
    if (discovery_) {
      try {
        discovery_->announce_bye();
      } catch (const std::exception&) {
      }
      discovery_.reset();
    }
    cv_.notify_all();
    loop_.join();
    server_->stop();
    transport_.reset();
  }

  /// Test hook: run `fn` on the core thread and wait for it.
  template <typename Fn>
  auto run_in_loop(Fn&& fn) {
    using R = decltype(fn());
    return run_on_loop<R>(std::forward<Fn>(fn));
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct Latch {
    std::shared_ptr<std::promise<InsertCommandResp>> reply;
  };

  // ---- event queue -----------------------------------------------------

  bool post(std::function<void()> fn) {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return false;
      queue_.push_back(std::move(fn));
    }
    cv_.notify_all();
    return true;
  }

  void event_loop() {
    std::unique_lock lock(mu_);
    while (!stopping_) {
      if (queue_.empty()) {
        auto next = next_deadline();
        if (next)
          cv_.wait_until(lock, *next);
        else
          cv_.wait(lock);
      }
      if (stopping_) break;
      while (!queue_.empty()) {
        auto fn = std::move(queue_.front());
        queue_.pop_front();
        lock.unlock();
        fn();
        lock.lock();
        if (stopping_) break;
      }
      if (stopping_) break;
      auto now = Clock::now();
      for (TimerKind kind : {TimerKind::Election, TimerKind::Heartbeat}) {
        auto& deadline = deadlines_[static_cast<int>(kind)];
        if (deadline && *deadline <= now) {
          deadline.reset();
          lock.unlock();
          on_timer(kind);
          lock.lock();
        }
      }
    }
    // Drain: unblock handler threads stuck on latches or queued tasks.
    std::deque<std::function<void()>> leftovers;
    leftovers.swap(queue_);
    lock.unlock();
    for (auto& fn : leftovers) fn();
    fail_latches();
  }

  std::optional<Clock::time_point> next_deadline() const {
    std::optional<Clock::time_point> next;
    for (const auto& d : deadlines_)
      if (d && (!next || *d < *next)) next = d;
    return next;
  }

  void on_timer(TimerKind kind) {
    if (!core_) return;
    if (kind == TimerKind::Election) {
      if (core_->state().role == Role::Leader) return;
      perform(core_->on_election_timeout());
    } else {
      if (core_->state().role != Role::Leader) return;
      perform(core_->on_heartbeat_tick());
    }
    record_commits();
  }

  // ---- core glue ---------------------------------------------------------

  void make_core(const std::vector<std::string>& peers, int timeout_min,
                 int timeout_max, int initial_timeout = 0) {
    CoreConfig cfg;
    cfg.self = address_;
    cfg.peers = peers;
    cfg.election_timeout_min_ms = timeout_min;
    cfg.election_timeout_max_ms = timeout_max;
    cfg.initial_election_timeout_ms = initial_timeout;
    cfg.heartbeat_period_ms = options_.heartbeat_period_ms;
    cfg.heartbeat_uses_election_timeout =
        options_.heartbeat_uses_election_timeout;
    cfg.rng_seed = options_.rng_seed;
    core_ = std::make_unique<RaftCore>(cfg);
  }

  void perform(const Actions& actions) {
    for (const auto& action : actions) {
      if (const auto* send = std::get_if<SendAction>(&action)) {
        dispatch_send(send->target, send->request);
      } else if (const auto* bc = std::get_if<BroadcastAction>(&action)) {
        for (const auto& peer : core_->peers()) dispatch_send(peer, bc->request);
      } else if (const auto* arm = std::get_if<ArmTimerAction>(&action)) {
        set_deadline(arm->timer,
                     Clock::now() + std::chrono::milliseconds(arm->duration_ms));
      } else if (const auto* cancel = std::get_if<CancelTimerAction>(&action)) {
        set_deadline(cancel->timer, std::nullopt);
      } else if (std::holds_alternative<ApplyCommittedAction>(action)) {
        apply_now();
      } else if (const auto* reply = std::get_if<ReplyToClientAction>(&action)) {
        release_latch(reply->index);
      } else if (std::holds_alternative<BecomeFollowerAction>(action)) {
        fail_latches();  // leadership lost: waiting clients must retry
      }
    }
  }

  void set_deadline(TimerKind kind, std::optional<Clock::time_point> at) {
    std::lock_guard lock(mu_);
    deadlines_[static_cast<int>(kind)] = at;
    cv_.notify_all();
  }

  void dispatch_send(const std::string& target, const MessageBody& body) {
    if (const auto* ae = std::get_if<AppendEntriesReq>(&body)) {
      LogIndex prev = ae->prev_log_index;
      auto count = static_cast<std::uint64_t>(ae->entries.size());
      transport_->call_async(
          target, body, options_.peer_call_timeout_ms,
          [this, target, prev, count](CallResult r) {
            if (!r.ok() || !r.response->is<AppendEntriesResp>()) return;
            AppendEntriesResp resp = r.response->as<AppendEntriesResp>();
            post([this, target, resp, prev, count] {
              if (!core_) return;
              perform(core_->on_append_response(target, resp, prev, count));
              record_commits();
            });
          });
    } else if (std::holds_alternative<RequestVoteReq>(body)) {
      transport_->call_async(
          target, body, options_.peer_call_timeout_ms,
          [this, target](CallResult r) {
            if (!r.ok() || !r.response->is<RequestVoteResp>()) return;
            RequestVoteResp resp = r.response->as<RequestVoteResp>();
            post([this, target, resp] {
              if (!core_) return;
              perform(core_->on_vote_response(target, resp));
              record_commits();
            });
          });
    }
  }

  void apply_now() {
    auto applied = core_->apply_committed(*sm_);
    for (const auto& r : applied) release_latch(r.index);
  }

  void record_commits() {
    if (!core_) return;
    while (recorded_commit_ < core_->state().commit_index) {
      ++recorded_commit_;
      commit_times_ms_.emplace_back(recorded_commit_, steady_now_ms());
    }
  }

  void release_latch(LogIndex index) {
    auto it = latches_.find(index);
    if (it == latches_.end()) return;
    if (index > core_->state().last_applied) return;
    const LogEntry& entry = core_->state().entry_at(index);
    InsertCommandResp resp{entry.success.value_or(false),
                           entry.result.value_or(""), ""};
    for (auto& latch : it->second) latch.reply->set_value(resp);
    latches_.erase(it);
  }

  void fail_latches() {
    InsertCommandResp resp;
    resp.success = false;
    if (core_ && core_->state().current_leader &&
        *core_->state().current_leader != address_)
      resp.leader_address = *core_->state().current_leader;
    for (auto& [index, latches] : latches_)
      for (auto& latch : latches) latch.reply->set_value(resp);
    latches_.clear();
  }

  void on_discovery_event(const Message& event, std::int64_t now_ms) {
    handle_discovery_event(peer_table_, event, now_ms);
    if (options_.dynamic_membership && core_) {
      auto addresses = peer_table_.addresses();
      std::erase(addresses, address_);
      core_->set_peers(std::move(addresses));
    }
  }

  // ---- request handling (runs on connection threads) ----------------------

  std::optional<Message> handle_message(const Message& msg) {
    switch (msg.type()) {
      case MsgType::AppendEntriesReq: {
        auto resp = run_on_loop<AppendEntriesResp>([this, &msg] {
          if (!core_) return AppendEntriesResp{0, false};
          auto [r, actions] =
              core_->handle_append_entries(msg.as<AppendEntriesReq>());
          perform(actions);
          record_commits();
          return r;
        });
        return Message{msg.msg_id, address_, resp};
      }
      case MsgType::RequestVoteReq: {
        auto resp = run_on_loop<RequestVoteResp>([this, &msg] {
          if (!core_) return RequestVoteResp{0, false};
          auto [r, actions] =
              core_->handle_request_vote(msg.as<RequestVoteReq>());
          perform(actions);
          return r;
        });
        return Message{msg.msg_id, address_, resp};
      }
      case MsgType::InsertCommandReq:
        return handle_insert(msg);
      case MsgType::AssignConfigReq:
        return handle_assign(msg);
      case MsgType::StartReq: {
        run_on_loop<bool>([this] {
          if (!core_) return false;
          if (pending_bootstrap_) {
            perform(core_->bootstrap(pending_bootstrap_->role,
                                     pending_bootstrap_->term,
                                     pending_bootstrap_->leader));
            pending_bootstrap_.reset();
          } else {
            perform(core_->start());
          }
          return true;
        });
        return Message{msg.msg_id, address_, StartResp{true}};
      }
      case MsgType::DumpReq: {
        auto dump = run_on_loop<DumpResp>([this] { return build_dump(); });
        return Message{msg.msg_id, address_, dump};
      }
      case MsgType::WriteStatsReq: {
        bool ok = write_stats(msg.as<WriteStatsReq>().path);
        return Message{msg.msg_id, address_, WriteStatsResp{ok}};
      }
      case MsgType::ShutdownReq: {
        {
          std::lock_guard lock(mu_);
          shutdown_requested_ = true;
        }
        shutdown_cv_.notify_all();
        return Message{msg.msg_id, address_, ShutdownResp{true}};
      }
      default:
        return std::nullopt;  // one-way or unexpected: nothing to say
    }
  }

  template <typename R, typename Fn>
  R run_on_loop(Fn&& fn) {
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<Fn>(fn));
    auto future = task->get_future();
    if (!post([task] { (*task)(); })) return R{};
    return future.get();
  }

  Message handle_insert(const Message& msg) {
    const auto& req = msg.as<InsertCommandReq>();
    auto reply = std::make_shared<std::promise<InsertCommandResp>>();
    auto future = reply->get_future();
    bool posted = post([this, req, reply] {
      if (!core_) {
        reply->set_value(InsertCommandResp{false, "", ""});
        return;
      }
      ProposeOutcome outcome =
          core_->propose(req.uid, req.command, req.parameters);
      switch (outcome.kind) {
        case ProposeOutcome::Kind::Redirect: {
          InsertCommandResp resp;
          resp.success = false;
          if (outcome.leader && *outcome.leader != address_)
            resp.leader_address = *outcome.leader;
          reply->set_value(resp);
          return;
        }
        case ProposeOutcome::Kind::Duplicate:
          reply->set_value(
              InsertCommandResp{outcome.success, outcome.result, ""});
          return;
        case ProposeOutcome::Kind::Pending:
          latches_[outcome.index].push_back(Latch{reply});
          perform(core_->on_heartbeat_tick());
          if (core_->state().commit_index > core_->state().last_applied)
            apply_now();  // single-server cluster commits alone
          record_commits();
          return;
      }
    });
    // The reply is released by the majority latch (or failed on leadership
    // loss / shutdown); the client side enforces its own timeout as well. The
    // long stop here only reaps handler threads whose client went away.
    InsertCommandResp resp;
    if (posted &&
        future.wait_for(std::chrono::seconds(60)) == std::future_status::ready)
      resp = future.get();
    else
      resp.success = false;
    return Message{msg.msg_id, address_, resp};
  }

  Message handle_assign(const Message& msg) {
    const auto& req = msg.as<AssignConfigReq>();
    bool ok = run_on_loop<bool>([this, req] {
      options_.heartbeat_uses_election_timeout = req.heartbeat_mode == "paper";
      make_core(req.peers, req.election_timeout_min_ms,
                req.election_timeout_max_ms, req.election_timeout_ms);
      Role role = req.role == "leader" ? Role::Leader : Role::Follower;
      pending_bootstrap_ = PendingBootstrap{role, req.term, req.current_leader};
      return true;
    });
    return Message{msg.msg_id, address_, AssignConfigResp{ok}};
  }

  DumpResp build_dump() {
    DumpResp dump;
    dump.id = options_.endpoint_id;
    if (core_) {
      const ServerState& st = core_->state();
      dump.role = to_string(st.role);
      dump.current_term = st.current_term;
      dump.commit_index = st.commit_index;
      dump.last_applied = st.last_applied;
      dump.log.reserve(st.log.size());
      for (const auto& e : st.log) dump.log.push_back(to_wire(e));
    }
    dump.kv_entries = sm_->entries();
    for (const auto& [uid, outcome] : sm_->applied_uids())
      dump.applied_uids[uid] = AppliedUid{outcome.result, outcome.success};
    dump.commit_times_ms = commit_times_ms_;
    return dump;
  }

  bool write_stats(const std::string& path) {
    DumpResp dump = run_on_loop<DumpResp>([this] { return build_dump(); });
    nlohmann::json j{{"id", dump.id},
                     {"role", dump.role},
                     {"term", dump.current_term},
                     {"commitIndex", dump.commit_index},
                     {"lastApplied", dump.last_applied},
                     {"logLength", dump.log.size()},
                     {"appliedUids", dump.applied_uids.size()}};
    std::ofstream out(path);
    if (!out) return false;
    out << j.dump(2) << "\n";
    return out.good();
  }

  ServerOptions options_;
  std::string address_;
  std::unique_ptr<MessageServer> server_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<DiscoveryAgent> discovery_;
  std::unique_ptr<RaftCore> core_;
  std::unique_ptr<KvStateMachine> sm_;
  PeerTable peer_table_;

  struct PendingBootstrap {
    Role role;
    Term term;
    std::string leader;
  };
  std::optional<PendingBootstrap> pending_bootstrap_;
  std::map<LogIndex, std::vector<Latch>> latches_;
  std::vector<std::pair<LogIndex, std::int64_t>> commit_times_ms_;
  LogIndex recorded_commit_ = 0;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable shutdown_cv_;
  std::deque<std::function<void()>> queue_;
  std::optional<Clock::time_point> deadlines_[2];
  bool stopping_ = false;
  bool shutdown_requested_ = false;
  std::thread loop_;
};

}  // namespace raftdev

#endif  // RAFTDEV_SERVER_HPP_
