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

#ifndef RAFTDEV_SIMNET_HPP_
#define RAFTDEV_SIMNET_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "raftdev/core.hpp"
#include "raftdev/message.hpp"
#include "raftdev/state_machine.hpp"
#include "raftdev/types.hpp"

// Deterministic in-process network and timer simulator. It drives multiple
// RaftCore instances through seeded schedules under message drop, delay,
// partition and crash faults, in virtual milliseconds, while an online
// checker validates the safety invariants after every step. The same seed
// always reproduces the same trace, byte for byte.

namespace raftdev {
namespace sim {

struct PartitionChange {
  std::int64_t at_ms = 0;
  // Disjoint server-index groups; servers in different groups cannot talk.
  // Empty means the partition heals.
  std::vector<std::vector<int>> groups;
};

struct CrashEvent {
  std::int64_t at_ms = 0;
  int server = 0;
  // Resolve the victim at fire time: whichever server is currently leader
  // (re-tried shortly if none). `server` is ignored when set.
  bool leader_target = false;
};

struct RestartEvent {
  std::int64_t at_ms = 0;
  int server = 0;
};

/// A simulated client command injected at a virtual time. The client retries
/// with the same uid across redirects, timeouts and backoff, like the real
/// client library.
struct ClientOp {
  std::int64_t at_ms = 0;
  std::string command;
  std::vector<std::string> parameters;
};

struct Schedule {
  std::uint64_t seed = 0;
  double drop_rate = 0.0;
  int delay_min_ms = 0;
  int delay_max_ms = 5;
  std::vector<PartitionChange> partitions;
  std::vector<CrashEvent> crashes;
  std::vector<RestartEvent> restarts;
  std::vector<ClientOp> client_ops;
  std::int64_t duration_ms = 2000;
};

enum class TraceKind : std::uint8_t {
  Send,
  Deliver,
  Drop,
  TimerFire,
  Crash,
  Restart,
  RoleChange,
  Commit,
  Apply,
};

inline const char* to_string(TraceKind k) {
  static const char* names[] = {"send",    "deliver", "drop",
                                "timerFire", "crash",   "restart",
                                "roleChange", "commit",  "apply"};
  return names[static_cast<int>(k)];
}

enum class DropReason : std::uint8_t { Random, Partition, DeadTarget };

inline const char* to_string(DropReason r) {
  static const char* names[] = {"random", "partition", "dead"};
  return names[static_cast<int>(r)];
}

/// One totally ordered observation. Endpoints are encoded as server index in
/// [0, n) or n+k for simulated client k.
struct TraceEvent {
  std::int64_t time_ms = 0;
  std::uint64_t seq = 0;
  TraceKind kind{};
  int a = -1;  // receiver/owner endpoint
  int b = -1;  // sender/target endpoint
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  std::uint8_t aux = 0;  // MsgType, TimerKind, Role or DropReason
  std::string detail;
};

struct Violation {
  std::string invariant;
  std::string detail;
  std::int64_t time_ms = 0;
  std::uint64_t seq = 0;
};

/// Final state of one simulated server.
struct ReplicaSnapshot {
  bool alive = false;
  ServerState state;
  std::map<std::string, std::string> kv_entries;
  std::map<std::string, KvStateMachine::AppliedOutcome> applied_uids;
};

struct ClientOpOutcome {
  std::string uid;
  bool completed = false;
  bool success = false;
  std::string result;
  int attempts = 0;
};

struct SimResult {
  std::vector<TraceEvent> trace;
  std::vector<ReplicaSnapshot> replicas;
  std::vector<Violation> violations;
  std::vector<ClientOpOutcome> client_ops;
  std::uint64_t event_count = 0;
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_str(std::uint64_t h, const std::string& s) {
  h = fnv1a(h, s.data(), s.size());
  return fnv1a(h, "\x1f", 1);
}

inline std::uint64_t entry_chain_hash(std::uint64_t prev, const LogEntry& e) {
  std::uint64_t h = prev ^ 0xcbf29ce484222325ULL;
  h = fnv1a(h, &e.index, sizeof(e.index));
  h = fnv1a(h, &e.term, sizeof(e.term));
  h = hash_str(h, e.uid);
  h = hash_str(h, e.command);
  for (const auto& p : e.parameters) h = hash_str(h, p);
  return h;
}

inline std::uint64_t entry_payload_hash(const LogEntry& e) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = hash_str(h, e.uid);
  h = hash_str(h, e.command);
  for (const auto& p : e.parameters) h = hash_str(h, p);
  return h;
}

}  // namespace detail

/// Standalone invariant audit over a set of server views (states plus logs).
/// Used by tests on hand-built inputs and by the simulator on its own finals.
struct ServerView {
  std::string id;
  Role role = Role::Follower;
  Term current_term = 0;
  LogIndex commit_index = 0;
  std::vector<LogEntry> log;
};

inline std::vector<Violation> check_invariants(
    const std::vector<ServerView>& views) {
  std::vector<Violation> out;
  // Election safety: at most one leader per term among the views.
  std::map<Term, std::string> leaders;
  for (const auto& v : views) {
    if (v.role != Role::Leader) continue;
    auto [it, inserted] = leaders.emplace(v.current_term, v.id);
    if (!inserted && it->second != v.id)
      out.push_back({"ElectionSafety",
                     "two leaders in term " + std::to_string(v.current_term) +
                         ": " + it->second + " and " + v.id,
                     0, 0});
  }
  // Log matching: equal (index, term) implies identical logs up to there.
  for (size_t i = 0; i < views.size(); ++i) {
    for (size_t j = i + 1; j < views.size(); ++j) {
      const auto& a = views[i].log;
      const auto& b = views[j].log;
      size_t upto = std::min(a.size(), b.size());
      for (size_t k = upto; k-- > 0;) {
        if (a[k].term != b[k].term) continue;
        for (size_t m = 0; m <= k; ++m) {
          if (a[m].term != b[m].term || a[m].uid != b[m].uid ||
              a[m].command != b[m].command ||
              a[m].parameters != b[m].parameters) {
            out.push_back(
                {"LogMatching",
                 views[i].id + " and " + views[j].id + " agree at index " +
                     std::to_string(k + 1) + " but differ at index " +
                     std::to_string(m + 1),
                 0, 0});
            m = k;  // one report per pair
            k = 0;
          }
        }
        break;  // deepest agreement point checked
      }
    }
  }
  // State machine safety over committed prefixes: one command per index, and
  // each uid commits at one index only.
  std::map<LogIndex, std::pair<std::uint64_t, std::string>> by_index;
  std::map<std::string, LogIndex> by_uid;
  for (const auto& v : views) {
    for (LogIndex idx = 1; idx <= v.commit_index && idx <= v.log.size(); ++idx) {
      const LogEntry& e = v.log[idx - 1];
      std::uint64_t h = detail::entry_payload_hash(e);
      auto [it, inserted] = by_index.emplace(idx, std::make_pair(h, v.id));
      if (!inserted && it->second.first != h)
        out.push_back({"StateMachineSafety",
                       "index " + std::to_string(idx) +
                           " committed with different commands on " +
                           it->second.second + " and " + v.id,
                       0, 0});
      auto [uit, uinserted] = by_uid.emplace(e.uid, idx);
      if (!uinserted && uit->second != idx)
        out.push_back({"UidExactlyOnce",
                       "uid " + e.uid + " committed at index " +
                           std::to_string(uit->second) + " and " +
                           std::to_string(idx),
                       0, 0});
    }
  }
  return out;
}

/// Deterministic simulation of one schedule against `cluster_size` servers.
class SimNet {
 public:
  SimNet(int cluster_size, Schedule schedule, bool record_trace = false)
      : n_(cluster_size),
        schedule_(std::move(schedule)),
        record_trace_(record_trace),
        rng_(schedule_.seed) {}

  SimResult run() {
    setup();
    while (!queue_.empty()) {
      Pending ev = pop();
      if (ev.time_ms > schedule_.duration_ms) break;
      now_ = ev.time_ms;
      dispatch(ev);
      ++result_.event_count;
    }
    finalize();
    return std::move(result_);
  }

 private:
  // ---- event plumbing ------------------------------------------------

  struct SimMsg {
    std::uint64_t id;
    int from;
    int to;
    MessageBody body;
  };

  struct EvDeliver {
    SimMsg msg;
  };
  struct EvTimer {
    int server;
    TimerKind kind;
    std::uint64_t generation;
  };
  struct EvCrash {
    int server;
    bool leader_target;
  };
  struct EvRestart {
    int server;
  };
  struct EvPartition {
    std::vector<std::vector<int>> groups;
  };
  struct EvClientStart {
    int op;
  };
  struct EvClientTimeout {
    int op;
    std::uint64_t generation;
  };
  struct EvClientRetry {
    int op;
    std::uint64_t generation;
  };

  using EventBody = std::variant<EvDeliver, EvTimer, EvCrash, EvRestart,
                                 EvPartition, EvClientStart, EvClientTimeout,
                                 EvClientRetry>;

  struct Pending {
    std::int64_t time_ms;
    std::uint64_t seq;
    EventBody body;
  };

  struct PendingCompare {
    bool operator()(const Pending& x, const Pending& y) const {
      if (x.time_ms != y.time_ms) return x.time_ms > y.time_ms;
      return x.seq > y.seq;
    }
  };

  void push(std::int64_t at, EventBody body) {
    queue_.push(Pending{at, next_seq_++, std::move(body)});
  }

  Pending pop() {
    Pending p = queue_.top();
    queue_.pop();
    return p;
  }

  // ---- per-server runtime state ---------------------------------------

  struct SentCtx {
    int target;
    LogIndex prev_log_index;
    std::uint64_t entry_count;
  };

  struct Waiter {
    int client_op;
    std::uint64_t request_id;
  };

  struct Server {
    std::unique_ptr<RaftCore> core;
    std::unique_ptr<KvStateMachine> sm;
    bool alive = false;
    int incarnation = 0;
    std::uint64_t timer_gen[2] = {0, 0};
    std::map<std::uint64_t, SentCtx> sent;          // msg id -> append context
    std::map<LogIndex, std::vector<Waiter>> waiters;

    // checker bookkeeping
    Term seen_term = 0;
    LogIndex seen_commit = 0;
    LogIndex seen_applied = 0;
    LogIndex traced_commit = 0;
    Role prev_role = Role::Follower;
    Term prev_role_term = 0;
    size_t prev_log_len = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> chain;  // (idhash, chainhash)
  };

  struct Client {
    enum class Phase { Waiting, Backoff, Done, Idle } phase = Phase::Idle;
    std::string uid;
    std::string command;
    std::vector<std::string> parameters;
    int target = -1;
    std::uint64_t generation = 0;  // bumps on every send/backoff
    std::uint64_t outstanding_id = 0;
    int attempts = 0;
    bool success = false;
    std::string result;
  };

  std::string address_of(int server) const { return "S" + std::to_string(server); }

  int index_of(const std::string& address) const {
    return std::stoi(address.substr(1));
  }

  // ---- lifecycle -------------------------------------------------------

  void setup() {
    servers_.resize(n_);
    group_of_.assign(n_, 0);
    for (int i = 0; i < n_; ++i) boot_server(i, /*initial=*/true);
    for (const auto& p : schedule_.partitions)
      push(p.at_ms, EvPartition{p.groups});
    for (const auto& c : schedule_.crashes)
      push(c.at_ms, EvCrash{c.server, c.leader_target});
    for (const auto& r : schedule_.restarts) push(r.at_ms, EvRestart{r.server});
    clients_.resize(schedule_.client_ops.size());
    for (size_t k = 0; k < schedule_.client_ops.size(); ++k) {
      clients_[k].command = schedule_.client_ops[k].command;
      clients_[k].parameters = schedule_.client_ops[k].parameters;
      clients_[k].uid = "op-" + std::to_string(k) + "-" +
                        std::to_string(schedule_.seed & 0xFFFF);
      push(schedule_.client_ops[k].at_ms, EvClientStart{static_cast<int>(k)});
    }
  }

  void boot_server(int i, bool initial) {
    Server& s = servers_[i];
    CoreConfig cfg;
    cfg.self = address_of(i);
    for (int j = 0; j < n_; ++j)
      if (j != i) cfg.peers.push_back(address_of(j));
    cfg.rng_seed = schedule_.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)) ^
                   (static_cast<std::uint64_t>(s.incarnation) << 32);
    s.core = std::make_unique<RaftCore>(cfg);
    s.sm = std::make_unique<KvStateMachine>();
    s.alive = true;
    s.sent.clear();
    s.waiters.clear();
    s.seen_term = 0;
    s.seen_commit = 0;
    s.seen_applied = 0;
    s.traced_commit = 0;
    s.prev_role = Role::Follower;
    s.prev_role_term = 0;
    s.prev_log_len = 0;
    s.chain.clear();
    (void)initial;
    perform(i, s.core->start());
  }

  // ---- tracing ---------------------------------------------------------

  void trace(TraceKind kind, int a, int b, std::uint64_t n1, std::uint64_t n2,
             std::uint8_t aux, std::string detail = {}) {
    if (!record_trace_) return;
    result_.trace.push_back(
        TraceEvent{now_, trace_seq_++, kind, a, b, n1, n2, aux,
                   std::move(detail)});
  }

  void violation(std::string invariant, std::string detail) {
    result_.violations.push_back(
        {std::move(invariant), std::move(detail), now_, trace_seq_});
  }

  // ---- network ---------------------------------------------------------

  bool partitioned(int a, int b) const {
    if (a >= n_ || b >= n_) return false;  // clients bypass partitions
    return group_of_[a] != group_of_[b];
  }

  void send_msg(int from, int to, MessageBody body, std::uint64_t reuse_id = 0) {
    SimMsg msg{reuse_id ? reuse_id : next_msg_id_++, from, to, std::move(body)};
    auto type = static_cast<std::uint8_t>(msg.body.index());
    trace(TraceKind::Send, to, from, msg.id, 0, type);
    if (schedule_.drop_rate > 0 &&
        uniform_double() < schedule_.drop_rate) {
      trace(TraceKind::Drop, to, from, msg.id, 0,
            static_cast<std::uint8_t>(DropReason::Random));
      return;
    }
    std::int64_t delay = uniform_int(schedule_.delay_min_ms,
                                     std::max(schedule_.delay_min_ms,
                                              schedule_.delay_max_ms));
    push(now_ + delay, EvDeliver{std::move(msg)});
  }

  double uniform_double() {
    return static_cast<double>(rng_()) /
           static_cast<double>(std::numeric_limits<std::uint64_t>::max());
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<std::int64_t>(
                    rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // ---- action interpretation -------------------------------------------

  void perform(int server, const Actions& actions) {
    Server& s = servers_[server];
    for (const auto& action : actions) {
      if (const auto* send = std::get_if<SendAction>(&action)) {
        int to = index_of(send->target);
        std::uint64_t id = next_msg_id_++;
        if (const auto* ae = std::get_if<AppendEntriesReq>(&send->request))
          s.sent[id] = SentCtx{to, ae->prev_log_index,
                               static_cast<std::uint64_t>(ae->entries.size())};
        send_msg(server, to, send->request, id);
      } else if (const auto* bc = std::get_if<BroadcastAction>(&action)) {
        for (const auto& peer : s.core->peers())
          send_msg(server, index_of(peer), bc->request);
      } else if (const auto* arm = std::get_if<ArmTimerAction>(&action)) {
        auto idx = static_cast<int>(arm->timer);
        std::uint64_t gen = ++s.timer_gen[idx];
        push(now_ + arm->duration_ms, EvTimer{server, arm->timer, gen});
      } else if (const auto* cancel = std::get_if<CancelTimerAction>(&action)) {
        ++s.timer_gen[static_cast<int>(cancel->timer)];
      } else if (std::holds_alternative<ApplyCommittedAction>(action)) {
        apply_now(server);
      } else if (const auto* reply = std::get_if<ReplyToClientAction>(&action)) {
        release_waiters(server, reply->index);
      } else if (std::holds_alternative<BecomeFollowerAction>(action)) {
        on_role_change(server);
        fail_waiters(server);
      } else if (std::holds_alternative<BecomeCandidateAction>(action)) {
        on_role_change(server);
      } else if (std::holds_alternative<BecomeLeaderAction>(action)) {
        on_role_change(server);
      }
    }
  }

  void on_role_change(int server) {
    const Server& s = servers_[server];
    trace(TraceKind::RoleChange, server, -1, s.core->state().current_term, 0,
          static_cast<std::uint8_t>(s.core->state().role),
          to_string(s.core->state().role));
  }

  void apply_now(int server) {
    Server& s = servers_[server];
    auto applied = s.core->apply_committed(*s.sm);
    for (const auto& r : applied) {
      if (record_trace_)
        trace(TraceKind::Apply, server, -1, r.index, 0, 0, r.uid);
      check_apply(server, r.index);
      release_waiters(server, r.index);
    }
  }

  void release_waiters(int server, LogIndex index) {
    Server& s = servers_[server];
    auto it = s.waiters.find(index);
    if (it == s.waiters.end()) return;
    if (index > s.core->state().last_applied) return;  // result not ready yet
    const LogEntry& entry = s.core->state().entry_at(index);
    for (const Waiter& w : it->second) {
      InsertCommandResp resp;
      resp.success = entry.success.value_or(false);
      resp.result = entry.result.value_or("");
      resp.leader_address.clear();
      send_msg(server, n_ + w.client_op, resp, w.request_id);
    }
    s.waiters.erase(it);
  }

  /// Leadership lost: answer every outstanding latch with a redirect so the
  /// waiting client retries (with the same uid) elsewhere.
  void fail_waiters(int server) {
    Server& s = servers_[server];
    for (auto& [index, waiters] : s.waiters) {
      for (const Waiter& w : waiters) {
        InsertCommandResp resp;
        resp.success = false;
        resp.result.clear();
        resp.leader_address =
            s.core->state().current_leader.value_or("");
        send_msg(server, n_ + w.client_op, resp, w.request_id);
      }
    }
    s.waiters.clear();
  }

  // ---- event dispatch ----------------------------------------------------

  void dispatch(Pending& ev) {
    std::visit(
        [&](auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, EvDeliver>)
            on_deliver(body.msg);
          else if constexpr (std::is_same_v<T, EvTimer>)
            on_timer(body);
          else if constexpr (std::is_same_v<T, EvCrash>)
            on_crash(body);
          else if constexpr (std::is_same_v<T, EvRestart>)
            on_restart(body.server);
          else if constexpr (std::is_same_v<T, EvPartition>)
            on_partition(body.groups);
          else if constexpr (std::is_same_v<T, EvClientStart>)
            client_begin(body.op);
          else if constexpr (std::is_same_v<T, EvClientTimeout>)
            client_timeout(body.op, body.generation);
          else if constexpr (std::is_same_v<T, EvClientRetry>)
            client_retry(body.op, body.generation);
        },
        ev.body);
  }

  void on_deliver(SimMsg& msg) {
    if (partitioned(msg.from, msg.to)) {
      trace(TraceKind::Drop, msg.to, msg.from, msg.id, 0,
            static_cast<std::uint8_t>(DropReason::Partition));
      return;
    }
    if (msg.to >= n_) {
      deliver_to_client(msg);
      return;
    }
    Server& s = servers_[msg.to];
    if (!s.alive) {
      trace(TraceKind::Drop, msg.to, msg.from, msg.id, 0,
            static_cast<std::uint8_t>(DropReason::DeadTarget));
      return;
    }
    trace(TraceKind::Deliver, msg.to, msg.from, msg.id, 0,
          static_cast<std::uint8_t>(msg.body.index()));

    if (const auto* req = std::get_if<RequestVoteReq>(&msg.body)) {
      auto [resp, actions] = s.core->handle_request_vote(*req);
      check_vote_grant(msg.to, resp, *req);
      perform(msg.to, actions);
      send_msg(msg.to, msg.from, resp, msg.id);
    } else if (const auto* req2 = std::get_if<AppendEntriesReq>(&msg.body)) {
      auto [resp, actions] = s.core->handle_append_entries(*req2);
      perform(msg.to, actions);
      send_msg(msg.to, msg.from, resp, msg.id);
    } else if (const auto* resp = std::get_if<RequestVoteResp>(&msg.body)) {
      perform(msg.to, s.core->on_vote_response(address_of(msg.from), *resp));
    } else if (const auto* resp2 = std::get_if<AppendEntriesResp>(&msg.body)) {
      auto it = s.sent.find(msg.id);
      if (it != s.sent.end()) {
        SentCtx ctx = it->second;
        s.sent.erase(it);
        perform(msg.to,
                s.core->on_append_response(address_of(msg.from), *resp2,
                                           ctx.prev_log_index, ctx.entry_count));
      }
    } else if (const auto* ins = std::get_if<InsertCommandReq>(&msg.body)) {
      handle_insert(msg.to, msg.from, msg.id, *ins);
    }
    post_step(msg.to);
  }

  void handle_insert(int server, int from, std::uint64_t id,
                     const InsertCommandReq& req) {
    Server& s = servers_[server];
    ProposeOutcome outcome =
        s.core->propose(req.uid, req.command, req.parameters);
    switch (outcome.kind) {
      case ProposeOutcome::Kind::Redirect: {
        InsertCommandResp resp;
        resp.success = false;
        resp.leader_address = outcome.leader.value_or("");
        send_msg(server, from, resp, id);
        return;
      }
      case ProposeOutcome::Kind::Duplicate: {
        InsertCommandResp resp;
        resp.success = outcome.success;
        resp.result = outcome.result;
        send_msg(server, from, resp, id);
        return;
      }
      case ProposeOutcome::Kind::Pending: {
        s.waiters[outcome.index].push_back(Waiter{from - n_, id});
        // A new proposal triggers immediate replication.
        perform(server, s.core->on_heartbeat_tick());
        if (s.core->state().commit_index > s.core->state().last_applied)
          apply_now(server);  // single-server cluster commits alone
        return;
      }
    }
  }

  void on_timer(const EvTimer& t) {
    Server& s = servers_[t.server];
    if (!s.alive) return;
    if (s.timer_gen[static_cast<int>(t.kind)] != t.generation) return;
    trace(TraceKind::TimerFire, t.server, -1, 0, 0,
          static_cast<std::uint8_t>(t.kind), to_string(t.kind));
    if (t.kind == TimerKind::Election) {
      if (s.core->state().role == Role::Leader) return;
      perform(t.server, s.core->on_election_timeout());
    } else {
      if (s.core->state().role != Role::Leader) return;
      perform(t.server, s.core->on_heartbeat_tick());
    }
    post_step(t.server);
  }

  void on_crash(const EvCrash& ev) {
    int server = ev.server;
    if (ev.leader_target) {
      server = -1;
      for (int i = 0; i < n_; ++i) {
        if (!servers_[i].alive) continue;
        if (servers_[i].core->state().role != Role::Leader) continue;
        if (server == -1 || servers_[i].core->state().current_term >
                                servers_[server].core->state().current_term)
          server = i;
      }
      if (server == -1) {  // nobody leads yet, try again shortly
        push(now_ + 25, EvCrash{0, true});
        return;
      }
    }
    Server& s = servers_[server];
    if (!s.alive) return;
    trace(TraceKind::Crash, server, -1, 0, 0, 0);
    s.alive = false;
    s.core.reset();
    s.sm.reset();
    s.waiters.clear();
    s.sent.clear();
    ++s.timer_gen[0];
    ++s.timer_gen[1];
    ++s.incarnation;
  }

  void on_restart(int server) {
    Server& s = servers_[server];
    if (s.alive) return;
    trace(TraceKind::Restart, server, -1, 0, 0, 0);
    boot_server(server, /*initial=*/false);
  }

  void on_partition(const std::vector<std::vector<int>>& groups) {
    group_of_.assign(n_, 0);
    for (size_t g = 0; g < groups.size(); ++g)
      for (int srv : groups[g]) group_of_[srv] = static_cast<int>(g) + 1;
    // Servers listed in no group fall into group 0 together.
  }

  // ---- simulated client -------------------------------------------------

  void client_begin(int op) {
    Client& c = clients_[op];
    c.phase = Client::Phase::Backoff;
    client_send(op, pick_server(op, -1));
  }

  int pick_server(int op, int avoid) {
    (void)op;
    if (n_ == 1) return 0;
    int choice;
    do {
      choice = static_cast<int>(rng_() % n_);
    } while (choice == avoid);
    return choice;
  }

  void client_send(int op, int target) {
    Client& c = clients_[op];
    c.phase = Client::Phase::Waiting;
    c.target = target;
    c.attempts += 1;
    ++c.generation;
    std::uint64_t id = next_msg_id_++;
    c.outstanding_id = id;
    send_msg(n_ + op, target, InsertCommandReq{c.uid, c.command, c.parameters},
             id);
    push(now_ + kClientRequestTimeoutMs, EvClientTimeout{op, c.generation});
  }

  void deliver_to_client(SimMsg& msg) {
    int op = msg.to - n_;
    Client& c = clients_[op];
    if (c.phase != Client::Phase::Waiting || msg.id != c.outstanding_id) return;
    const auto* resp = std::get_if<InsertCommandResp>(&msg.body);
    if (!resp) return;
    trace(TraceKind::Deliver, msg.to, msg.from, msg.id, 0,
          static_cast<std::uint8_t>(msg.body.index()));
    if (resp->success || !resp->result.empty()) {
      c.phase = Client::Phase::Done;
      c.success = resp->success;
      c.result = resp->result;
      return;
    }
    // Not-leader reply: follow a known leader immediately, otherwise back off
    // and try a different server.
    ++c.generation;
    if (!resp->leader_address.empty()) {
      client_send(op, index_of(resp->leader_address));
    } else {
      schedule_backoff(op);
    }
  }

  void schedule_backoff(int op) {
    Client& c = clients_[op];
    c.phase = Client::Phase::Backoff;
    ++c.generation;
    std::int64_t wait = uniform_int(1, kClientMaxBackoffMs);
    push(now_ + wait, EvClientRetry{op, c.generation});
  }

  void client_timeout(int op, std::uint64_t generation) {
    Client& c = clients_[op];
    if (c.phase != Client::Phase::Waiting || c.generation != generation) return;
    schedule_backoff(op);
  }

  void client_retry(int op, std::uint64_t generation) {
    Client& c = clients_[op];
    if (c.phase != Client::Phase::Backoff || c.generation != generation) return;
    client_send(op, pick_server(op, c.target));
  }

  // ---- online safety checker ---------------------------------------------

  void check_vote_grant(int server, const RequestVoteResp& resp,
                        const RequestVoteReq& req) {
    if (!resp.vote_granted) return;
    auto key = std::make_pair(server, resp.term);
    auto [it, inserted] = grants_.emplace(key, req.candidate_id);
    if (!inserted && it->second != req.candidate_id)
      violation("VoteSafety",
                address_of(server) + " granted term " +
                    std::to_string(resp.term) + " to " + it->second + " and " +
                    req.candidate_id);
  }

  void check_apply(int server, LogIndex index) {
    const Server& s = servers_[server];
    const LogEntry& e = s.core->state().entry_at(index);
    std::uint64_t h = detail::entry_payload_hash(e);
    auto [it, inserted] = applied_.emplace(index, h);
    if (!inserted && it->second != h)
      violation("StateMachineSafety",
                address_of(server) + " applied a different command at index " +
                    std::to_string(index));
    auto [uit, uinserted] = applied_uid_.emplace(e.uid, index);
    if (!uinserted && uit->second != index)
      violation("UidExactlyOnce",
                "uid " + e.uid + " applied at index " +
                    std::to_string(uit->second) + " and index " +
                    std::to_string(index) + " on " + address_of(server));
  }

  /// Invariant sweep after every server-touching event.
  void post_step(int server) {
    Server& s = servers_[server];
    if (!s.alive) return;
    const ServerState& st = s.core->state();

    if (st.current_term < s.seen_term)
      violation("TermMonotonic", address_of(server) + " term went backwards");
    if (st.commit_index < s.seen_commit)
      violation("CommitMonotonic",
                address_of(server) + " commitIndex went backwards");
    if (st.last_applied < s.seen_applied)
      violation("AppliedMonotonic",
                address_of(server) + " lastApplied went backwards");
    if (st.last_applied > st.commit_index ||
        st.commit_index > st.last_log_index())
      violation("CursorOrder",
                address_of(server) + " lastApplied/commitIndex/log disorder");
    s.seen_term = st.current_term;
    s.seen_commit = st.commit_index;
    s.seen_applied = st.last_applied;

    // Election safety: one leader per term, ever.
    if (st.role == Role::Leader) {
      auto [it, inserted] = leaders_.emplace(st.current_term, server);
      if (!inserted && it->second != server)
        violation("ElectionSafety",
                  "term " + std::to_string(st.current_term) + " led by " +
                      address_of(it->second) + " and " + address_of(server));
    }

    // Log matching via a cluster-wide (index, term) -> chain hash registry.
    size_t common = 0;
    size_t upto = std::min(s.chain.size(), st.log.size());
    while (common < upto) {
      const LogEntry& e = st.log[common];
      std::uint64_t idh =
          detail::fnv1a(e.term, e.uid.data(), e.uid.size());
      if (s.chain[common].first != idh) break;
      ++common;
    }
    bool truncated = common < s.chain.size();
    if (truncated) s.chain.resize(common);
    for (size_t i = s.chain.size(); i < st.log.size(); ++i) {
      const LogEntry& e = st.log[i];
      std::uint64_t idh = detail::fnv1a(e.term, e.uid.data(), e.uid.size());
      std::uint64_t prev = i == 0 ? 0 : s.chain[i - 1].second;
      std::uint64_t ch = detail::entry_chain_hash(prev, e);
      s.chain.emplace_back(idh, ch);
      auto key = std::make_pair(e.index, e.term);
      auto [it, inserted] = chain_registry_.emplace(key, ch);
      if (!inserted && it->second != ch)
        violation("LogMatching",
                  address_of(server) + " entry (" + std::to_string(e.index) +
                      ", term " + std::to_string(e.term) +
                      ") disagrees with another replica's history");
    }

    // Leader append-only within an unbroken leadership term.
    if (st.role == Role::Leader && s.prev_role == Role::Leader &&
        s.prev_role_term == st.current_term) {
      if (truncated || st.log.size() < s.prev_log_len)
        violation("LeaderAppendOnly",
                  address_of(server) + " rewrote its log while leader of term " +
                      std::to_string(st.current_term));
    }
    s.prev_role = st.role;
    s.prev_role_term = st.current_term;
    s.prev_log_len = st.log.size();

    // Commit trace.
    while (s.traced_commit < st.commit_index) {
      ++s.traced_commit;
      trace(TraceKind::Commit, server, -1, s.traced_commit,
            st.term_at(s.traced_commit), 0);
    }
  }

  void finalize() {
    result_.replicas.resize(n_);
    for (int i = 0; i < n_; ++i) {
      ReplicaSnapshot& snap = result_.replicas[i];
      snap.alive = servers_[i].alive;
      if (!snap.alive) continue;
      snap.state = servers_[i].core->state();
      snap.kv_entries = servers_[i].sm->entries();
      snap.applied_uids = servers_[i].sm->applied_uids();
    }
    result_.client_ops.resize(clients_.size());
    for (size_t k = 0; k < clients_.size(); ++k) {
      result_.client_ops[k].uid = clients_[k].uid;
      result_.client_ops[k].completed =
          clients_[k].phase == Client::Phase::Done;
      result_.client_ops[k].success = clients_[k].success;
      result_.client_ops[k].result = clients_[k].result;
      result_.client_ops[k].attempts = clients_[k].attempts;
    }
    // Cross-replica audit over the survivors' final states.
    std::vector<ServerView> views;
    for (int i = 0; i < n_; ++i) {
      if (!servers_[i].alive) continue;
      views.push_back(ServerView{address_of(i), servers_[i].core->state().role,
                                 servers_[i].core->state().current_term,
                                 servers_[i].core->state().commit_index,
                                 servers_[i].core->state().log});
    }
    for (auto v : check_invariants(views)) {
      v.time_ms = now_;
      result_.violations.push_back(std::move(v));
    }
  }

  static constexpr std::int64_t kClientRequestTimeoutMs = 1000;
  static constexpr std::int64_t kClientMaxBackoffMs = 1000;

  int n_;
  Schedule schedule_;
  bool record_trace_;
  std::mt19937_64 rng_;
  std::int64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_msg_id_ = 1;
  std::uint64_t trace_seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, PendingCompare> queue_;
  std::vector<Server> servers_;
  std::vector<Client> clients_;
  std::vector<int> group_of_;
  SimResult result_;

  std::map<Term, int> leaders_;
  std::map<std::pair<int, Term>, std::string> grants_;
  std::map<std::pair<LogIndex, Term>, std::uint64_t> chain_registry_;
  std::map<LogIndex, std::uint64_t> applied_;
  std::map<std::string, LogIndex> applied_uid_;
};

inline SimResult run_schedule(int cluster_size, const Schedule& schedule,
                              bool record_trace = false) {
  SimNet net(cluster_size, schedule, record_trace);
  return net.run();
}

// ---- schedule and trace (de)serialization ---------------------------------

inline nlohmann::json to_json(const Schedule& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["dropRate"] = s.drop_rate;
  j["delayMinMs"] = s.delay_min_ms;
  j["delayMaxMs"] = s.delay_max_ms;
  j["durationMs"] = s.duration_ms;
  j["partitions"] = nlohmann::json::array();
  for (const auto& p : s.partitions)
    j["partitions"].push_back({{"atMs", p.at_ms}, {"groups", p.groups}});
  j["crashes"] = nlohmann::json::array();
  for (const auto& c : s.crashes)
    j["crashes"].push_back({{"atMs", c.at_ms},
                            {"server", c.server},
                            {"leader", c.leader_target}});
  j["restarts"] = nlohmann::json::array();
  for (const auto& r : s.restarts)
    j["restarts"].push_back({{"atMs", r.at_ms}, {"server", r.server}});
  j["clientOps"] = nlohmann::json::array();
  for (const auto& op : s.client_ops)
    j["clientOps"].push_back({{"atMs", op.at_ms},
                              {"command", op.command},
                              {"parameters", op.parameters}});
  return j;
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
  Schedule s;
  s.seed = j.value("seed", 0ULL);
  s.drop_rate = j.value("dropRate", 0.0);
  s.delay_min_ms = j.value("delayMinMs", 0);
  s.delay_max_ms = j.value("delayMaxMs", 5);
  s.duration_ms = j.value("durationMs", 2000LL);
  for (const auto& p : j.value("partitions", nlohmann::json::array()))
    s.partitions.push_back(
        {p.at("atMs").get<std::int64_t>(),
         p.at("groups").get<std::vector<std::vector<int>>>()});
  for (const auto& c : j.value("crashes", nlohmann::json::array()))
    s.crashes.push_back({c.at("atMs").get<std::int64_t>(),
                         c.at("server").get<int>(), c.value("leader", false)});
  for (const auto& r : j.value("restarts", nlohmann::json::array()))
    s.restarts.push_back(
        {r.at("atMs").get<std::int64_t>(), r.at("server").get<int>()});
  for (const auto& op : j.value("clientOps", nlohmann::json::array()))
    s.client_ops.push_back(
        {op.at("atMs").get<std::int64_t>(), op.at("command").get<std::string>(),
         op.at("parameters").get<std::vector<std::string>>()});
  return s;
}

/// Renders one trace event as a single-line JSON object (newline-delimited
/// stream format for --trace-out).
inline std::string trace_event_to_json(const TraceEvent& e, int cluster_size) {
  auto endpoint = [&](int x) -> std::string {
    if (x < 0) return "";
    if (x < cluster_size) return "S" + std::to_string(x);
    return "C" + std::to_string(x - cluster_size);
  };
  nlohmann::json payload;
  switch (e.kind) {
    case TraceKind::Send:
    case TraceKind::Deliver:
      payload = {{"to", endpoint(e.a)},
                 {"from", endpoint(e.b)},
                 {"id", e.n1},
                 {"msg", to_string(static_cast<MsgType>(e.aux))}};
      break;
    case TraceKind::Drop:
      payload = {{"to", endpoint(e.a)},
                 {"from", endpoint(e.b)},
                 {"id", e.n1},
                 {"reason", to_string(static_cast<DropReason>(e.aux))}};
      break;
    case TraceKind::TimerFire:
      payload = {{"server", endpoint(e.a)}, {"timer", e.detail}};
      break;
    case TraceKind::Crash:
    case TraceKind::Restart:
      payload = {{"server", endpoint(e.a)}};
      break;
    case TraceKind::RoleChange:
      payload = {{"server", endpoint(e.a)},
                 {"role", e.detail},
                 {"term", e.n1}};
      break;
    case TraceKind::Commit:
      payload = {{"server", endpoint(e.a)}, {"index", e.n1}, {"term", e.n2}};
      break;
    case TraceKind::Apply:
      payload = {{"server", endpoint(e.a)}, {"index", e.n1}, {"uid", e.detail}};
      break;
  }
  nlohmann::json j{{"timeMs", e.time_ms},
                   {"seq", e.seq},
                   {"kind", to_string(e.kind)},
                   {"payload", std::move(payload)}};
  return j.dump();
}

inline std::string trace_to_ndjson(const std::vector<TraceEvent>& trace,
                                   int cluster_size) {
  std::string out;
  for (const auto& e : trace) {
    out += trace_event_to_json(e, cluster_size);
    out.push_back('\n');
  }
  return out;
}

/// Seeded schedule family used by the safety soak: five servers, bounded
/// drop/delay, at most two crashes, a dozen-odd client commands.
inline Schedule random_schedule(std::uint64_t seed, int cluster_size = 5) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  Schedule s;
  s.seed = seed;
  s.drop_rate = (rng() % 1000) / 1000.0 * 0.2;
  s.delay_min_ms = static_cast<int>(rng() % 5);
  s.delay_max_ms = s.delay_min_ms + static_cast<int>(rng() % (150 - s.delay_min_ms));
  s.duration_ms = 2500 + static_cast<std::int64_t>(rng() % 2000);

  int op_count = 4 + static_cast<int>(rng() % 12);
  for (int k = 0; k < op_count; ++k) {
    std::int64_t at = 100 + static_cast<std::int64_t>(
                                rng() % static_cast<std::uint64_t>(
                                            s.duration_ms * 7 / 10));
    std::string key = "k" + std::to_string(rng() % 8);
    if (rng() % 4 == 0)
      s.client_ops.push_back({at, "DEL", {key}});
    else
      s.client_ops.push_back({at, "PUT", {key, "v" + std::to_string(k)}});
  }

  int crash_count = static_cast<int>(rng() % 3);
  std::vector<int> crashed;
  for (int c = 0; c < crash_count; ++c) {
    int victim;
    do {
      victim = static_cast<int>(rng() % cluster_size);
    } while (std::find(crashed.begin(), crashed.end(), victim) != crashed.end());
    crashed.push_back(victim);
    std::int64_t at = 200 + static_cast<std::int64_t>(
                                rng() % static_cast<std::uint64_t>(
                                            s.duration_ms * 8 / 10));
    s.crashes.push_back({at, victim});
    if (rng() % 2 == 0) {
      std::int64_t back = at + 300 + static_cast<std::int64_t>(rng() % 1500);
      if (back < s.duration_ms) s.restarts.push_back({back, victim});
    }
  }

  if (rng() % 4 == 0 && cluster_size >= 5) {
    std::int64_t at = 300 + static_cast<std::int64_t>(rng() % 1000);
    s.partitions.push_back({at, {{0, 1}, {2, 3, 4}}});
    std::int64_t heal = at + 500 + static_cast<std::int64_t>(rng() % 800);
    if (heal < s.duration_ms) s.partitions.push_back({heal, {}});
  }
  return s;
}

}  // namespace sim
}  // namespace raftdev

#endif  // RAFTDEV_SIMNET_HPP_
