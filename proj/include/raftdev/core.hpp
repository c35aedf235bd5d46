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

#ifndef RAFTDEV_CORE_HPP_
#define RAFTDEV_CORE_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "raftdev/actions.hpp"
#include "raftdev/message.hpp"
#include "raftdev/state_machine.hpp"
#include "raftdev/types.hpp"

namespace raftdev {

struct CoreConfig {
  ServerId self;
  std::vector<ServerId> peers;  // service addresses, self excluded
  int election_timeout_min_ms = 150;
  int election_timeout_max_ms = 300;
  int heartbeat_period_ms = 50;
  // Reuse the server's own election timeout as the heartbeat period instead
  // of the shorter fixed cadence.
  bool heartbeat_uses_election_timeout = false;
  // Cap on entries per AppendEntries; a lagging peer catches up over
  // multiple rounds instead of receiving one unbounded message. 0 = no cap.
  std::uint32_t max_entries_per_append = 64;
  // First timeout value (e.g. manager-assigned); later elections re-draw
  // from [min, max]. 0 draws the first value from the range as well.
  int initial_election_timeout_ms = 0;
  std::uint64_t rng_seed = 0;
};

/// Outcome of proposing a command on this server.
struct ProposeOutcome {
  enum class Kind { Redirect, Duplicate, Pending } kind;
  // Redirect: where the leader is believed to be, possibly unset.
  std::optional<ServerId> leader;
  // Duplicate: the recorded execution outcome of the earlier entry.
  std::string result;
  bool success = false;
  // Pending (and Duplicate): index of the entry carrying this uid.
  LogIndex index = 0;
};

struct ApplyResult {
  LogIndex index = 0;
  std::string uid;
  bool success = false;
  std::string result;
};

/// Deterministic, event-driven Raft server logic. All inputs are explicit
/// events and all outputs are explicit Actions, so the same core runs under
/// the real transport and under the simulator. Callers must serialize all
/// invocations; the core holds no locks.
class RaftCore {
 public:
  explicit RaftCore(CoreConfig config)
      : config_(std::move(config)), rng_(config_.rng_seed) {
    std::sort(config_.peers.begin(), config_.peers.end());
    state_.election_timeout_ms = config_.initial_election_timeout_ms > 0
                                     ? config_.initial_election_timeout_ms
                                     : draw_election_timeout();
  }

  const ServerState& state() const { return state_; }
  const ServerId& self() const { return config_.self; }
  const std::vector<ServerId>& peers() const { return config_.peers; }
  std::uint32_t cluster_size() const {
    return static_cast<std::uint32_t>(config_.peers.size()) + 1;
  }

  /// Membership update from discovery; majority arithmetic follows it.
  void set_peers(std::vector<ServerId> peers) {
    std::sort(peers.begin(), peers.end());
    config_.peers = std::move(peers);
    for (const auto& p : config_.peers) {
      if (state_.role == Role::Leader) {
        state_.next_index.try_emplace(p, state_.last_log_index() + 1);
        state_.match_index.try_emplace(p, 0);
      }
    }
  }

  /// Arms the initial election timer. Call exactly once, before any event.
  Actions start() {
    return {ArmTimerAction{TimerKind::Election, state_.election_timeout_ms}};
  }

  /// Manager-driven bootstrap (benchmark setup): the whole cluster is told a
  /// common term and leader up front, as if that election already happened.
  Actions bootstrap(Role role, Term term, const ServerId& leader) {
    state_.current_term = term;
    state_.voted_for = leader;
    state_.current_leader = leader;
    if (role == Role::Leader) {
      if (leader != config_.self)
        throw std::invalid_argument("bootstrap leader must be self");
      return become_leader();
    }
    state_.role = Role::Follower;
    return {ArmTimerAction{TimerKind::Election, state_.election_timeout_ms}};
  }

  /// Term comparison rule applied by every receiver: a newer remote term
  /// forces this server down to follower and clears its vote.
  Actions observe_term(Term remote_term) {
    Actions actions;
    if (remote_term > state_.current_term) {
      bool was_follower = state_.role == Role::Follower;
      state_.current_term = remote_term;
      state_.voted_for.reset();
      state_.current_leader.reset();  // the new term's leader is unknown
      if (!was_follower) {
        if (state_.role == Role::Leader)
          actions.push_back(CancelTimerAction{TimerKind::Heartbeat});
        state_.role = Role::Follower;
        votes_granted_.clear();
        actions.push_back(BecomeFollowerAction{});
        actions.push_back(
            ArmTimerAction{TimerKind::Election, state_.election_timeout_ms});
      }
    }
    return actions;
  }

  std::pair<RequestVoteResp, Actions> handle_request_vote(
      const RequestVoteReq& req) {
    Actions actions = observe_term(req.term);
    RequestVoteResp resp{state_.current_term, false};
    if (req.term < state_.current_term) return {resp, actions};
    if (state_.voted_for && *state_.voted_for != req.candidate_id)
      return {resp, actions};
    bool candidate_up_to_date =
        req.last_log_term > state_.last_log_term() ||
        (req.last_log_term == state_.last_log_term() &&
         req.last_log_index >= state_.last_log_index());
    if (!candidate_up_to_date) return {resp, actions};
    state_.voted_for = req.candidate_id;
    resp.vote_granted = true;
    actions.push_back(
        ArmTimerAction{TimerKind::Election, state_.election_timeout_ms});
    return {resp, actions};
  }

  std::pair<AppendEntriesResp, Actions> handle_append_entries(
      const AppendEntriesReq& req) {
    if (req.term < state_.current_term)
      return {AppendEntriesResp{state_.current_term, false}, {}};
    Actions actions = observe_term(req.term);
    // Equal-term invocations from the term's leader also demote a candidate.
    if (state_.role != Role::Follower) {
      if (state_.role == Role::Leader)
        actions.push_back(CancelTimerAction{TimerKind::Heartbeat});
      state_.role = Role::Follower;
      votes_granted_.clear();
      actions.push_back(BecomeFollowerAction{});
    }
    // Any invocation from a live leader interrupts the waiting timer, also
    // when the consistency check below fails.
    actions.push_back(
        ArmTimerAction{TimerKind::Election, state_.election_timeout_ms});

    bool prev_matches =
        req.prev_log_index == 0 ||
        (req.prev_log_index <= state_.last_log_index() &&
         state_.term_at(req.prev_log_index) == req.prev_log_term);
    if (!prev_matches)
      return {AppendEntriesResp{state_.current_term, false}, actions};

    if (!state_.current_leader || *state_.current_leader != req.leader_id)
      state_.current_leader = req.leader_id;

    for (const auto& wire_entry : req.entries) {
      LogIndex idx = wire_entry.index;
      if (idx <= state_.last_log_index()) {
        if (state_.term_at(idx) == wire_entry.term) continue;
        truncate_from(idx);
      }
      if (idx != state_.last_log_index() + 1)
        throw std::logic_error("append entries not contiguous");
      append(from_wire(wire_entry));
    }

    if (req.leader_commit > state_.commit_index) {
      state_.commit_index =
          std::min<LogIndex>(req.leader_commit, state_.last_log_index());
      if (state_.commit_index > state_.last_applied)
        actions.push_back(ApplyCommittedAction{});
    }
    return {AppendEntriesResp{state_.current_term, true}, actions};
  }

  /// Follower/candidate inactivity window elapsed: start a new election.
  Actions on_election_timeout() {
    if (state_.role == Role::Leader)
      throw std::logic_error("election timeout fired in leader role");
    Actions actions;
    if (state_.role == Role::Follower) {
      state_.role = Role::Candidate;
      actions.push_back(BecomeCandidateAction{});
    }
    state_.current_term += 1;
    state_.voted_for = config_.self;
    state_.current_leader.reset();
    votes_granted_ = {config_.self};
    state_.election_timeout_ms = draw_election_timeout();
    actions.push_back(BroadcastAction{
        RequestVoteReq{state_.current_term, config_.self,
                       state_.last_log_index(), state_.last_log_term()}});
    actions.push_back(
        ArmTimerAction{TimerKind::Election, state_.election_timeout_ms});
    if (votes_granted_.size() >= majority_threshold(cluster_size())) {
      Actions win = become_leader();
      actions.insert(actions.end(), win.begin(), win.end());
    }
    return actions;
  }

  Actions on_vote_response(const ServerId& from, const RequestVoteResp& resp) {
    Actions actions = observe_term(resp.term);
    if (state_.role != Role::Candidate) return actions;
    if (resp.term < state_.current_term) return actions;  // stale round
    if (!resp.vote_granted) return actions;
    if (!std::binary_search(config_.peers.begin(), config_.peers.end(), from))
      return actions;  // unknown peer
    votes_granted_.insert(from);
    if (votes_granted_.size() >= majority_threshold(cluster_size())) {
      Actions win = become_leader();
      actions.insert(actions.end(), win.begin(), win.end());
    }
    return actions;
  }

  /// Client command arriving at this server, keyed by a client-generated uid.
  /// A Pending outcome means an entry now awaits the majority latch; the
  /// runtime should trigger a replication tick and hold the client reply
  /// until the matching ReplyToClient fires.
  ProposeOutcome propose(const std::string& uid, const std::string& command,
                         const std::vector<std::string>& parameters) {
    if (state_.role != Role::Leader)
      return ProposeOutcome{ProposeOutcome::Kind::Redirect,
                            state_.current_leader, "", false, 0};
    if (auto it = uid_index_.find(uid); it != uid_index_.end()) {
      const LogEntry& existing = state_.entry_at(it->second);
      if (existing.applied())
        return ProposeOutcome{ProposeOutcome::Kind::Duplicate, std::nullopt,
                              *existing.result, existing.success.value_or(false),
                              existing.index};
      // Committed-but-unapplied or still replicating: join the same latch.
      return ProposeOutcome{ProposeOutcome::Kind::Pending, std::nullopt, "",
                            false, existing.index};
    }
    LogEntry entry;
    entry.index = state_.last_log_index() + 1;
    entry.term = state_.current_term;
    entry.uid = uid;
    entry.command = command;
    entry.parameters = parameters;
    entry.responses_needed = needed_follower_responses(cluster_size());
    append(std::move(entry));
    LogIndex idx = state_.last_log_index();
    if (state_.entry_at(idx).responses_needed == 0 &&
        idx > state_.commit_index) {
      // Single-server cluster: the leader alone is the majority.
      state_.commit_index = idx;
    }
    return ProposeOutcome{ProposeOutcome::Kind::Pending, std::nullopt, "",
                          false, idx};
  }

  /// Follower reply to one AppendEntries send. The runtime echoes back what
  /// that send covered so the ack can be translated into match/next pointer
  /// moves.
  Actions on_append_response(const ServerId& from, const AppendEntriesResp& resp,
                             LogIndex sent_prev_log_index,
                             std::uint64_t sent_entry_count) {
    Actions actions = observe_term(resp.term);
    if (state_.role != Role::Leader) return actions;
    if (resp.term < state_.current_term) return actions;  // stale round
    if (!state_.match_index.contains(from)) return actions;

    if (!resp.success) {
      LogIndex& next = state_.next_index[from];
      next = std::max<LogIndex>(1, next - 1);
      return actions;
    }

    LogIndex acked = sent_prev_log_index + sent_entry_count;
    if (acked > state_.last_log_index())
      throw std::logic_error("ack beyond end of log");
    LogIndex prev_match = state_.match_index[from];
    if (acked <= prev_match) return actions;  // duplicate or reordered ack
    state_.match_index[from] = acked;
    state_.next_index[from] = acked + 1;

    LogIndex new_commit = state_.commit_index;
    for (LogIndex idx = prev_match + 1; idx <= acked; ++idx) {
      LogEntry& entry = state_.entry_at(idx);
      if (entry.responses_needed > 0) entry.responses_needed -= 1;
      if (entry.term == state_.current_term && entry.responses_needed == 0)
        new_commit = std::max(new_commit, idx);
    }
    if (new_commit > state_.commit_index) {
      LogIndex old_commit = state_.commit_index;
      state_.commit_index = new_commit;
      actions.push_back(ApplyCommittedAction{});
      for (LogIndex idx = old_commit + 1; idx <= new_commit; ++idx)
        actions.push_back(ReplyToClientAction{idx, state_.entry_at(idx).uid});
    }
    return actions;
  }

  /// Leader cadence: one AppendEntries per peer, carrying whatever suffix
  /// that peer is missing (possibly none).
  Actions on_heartbeat_tick() {
    if (state_.role != Role::Leader)
      throw std::logic_error("heartbeat tick outside leader role");
    Actions actions;
    for (const auto& peer : config_.peers) {
      LogIndex next = state_.next_index.at(peer);
      AppendEntriesReq req;
      req.term = state_.current_term;
      req.leader_id = config_.self;
      req.prev_log_index = next - 1;
      req.prev_log_term = state_.term_at(next - 1);
      LogIndex upto = state_.last_log_index();
      if (config_.max_entries_per_append > 0)
        upto = std::min<LogIndex>(upto, next - 1 + config_.max_entries_per_append);
      for (LogIndex idx = next; idx <= upto; ++idx)
        req.entries.push_back(to_wire(state_.entry_at(idx)));
      req.leader_commit = state_.commit_index;
      actions.push_back(SendAction{peer, std::move(req)});
    }
    actions.push_back(
        ArmTimerAction{TimerKind::Heartbeat, heartbeat_period_ms()});
    return actions;
  }

  /// Runs every committed-but-unapplied entry through the state machine, in
  /// order, recording each outcome on the entry. A failed insertion is
  /// recorded and still consumes the index, keeping replica logs identical.
  std::vector<ApplyResult> apply_committed(StateMachine& sm) {
    std::vector<ApplyResult> results;
    while (state_.commit_index > state_.last_applied) {
      state_.last_applied += 1;
      LogEntry& entry = state_.entry_at(state_.last_applied);
      auto [success, result] = sm.insert(entry);
      entry.success = success;
      entry.result = result;
      results.push_back({entry.index, entry.uid, success, result});
    }
    return results;
  }

  int heartbeat_period_ms() const {
    return config_.heartbeat_uses_election_timeout ? state_.election_timeout_ms
                                                   : config_.heartbeat_period_ms;
  }

  /// Test hook: lookup of a uid's entry index, if any.
  std::optional<LogIndex> index_of_uid(const std::string& uid) const {
    auto it = uid_index_.find(uid);
    if (it == uid_index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  int draw_election_timeout() {
    int span = config_.election_timeout_max_ms - config_.election_timeout_min_ms;
    if (span <= 0) return config_.election_timeout_min_ms;
    return config_.election_timeout_min_ms +
           static_cast<int>(rng_() % static_cast<std::uint64_t>(span + 1));
  }

  Actions become_leader() {
    state_.role = Role::Leader;
    state_.current_leader = config_.self;
    state_.next_index.clear();
    state_.match_index.clear();
    for (const auto& peer : config_.peers) {
      state_.next_index[peer] = state_.last_log_index() + 1;
      state_.match_index[peer] = 0;
    }
    Actions actions{CancelTimerAction{TimerKind::Election},
                    BecomeLeaderAction{}};
    Actions first_beat = on_heartbeat_tick();
    actions.insert(actions.end(), first_beat.begin(), first_beat.end());
    return actions;
  }

  void append(LogEntry entry) {
    uid_index_[entry.uid] = entry.index;
    state_.log.push_back(std::move(entry));
  }

  void truncate_from(LogIndex first_removed) {
    if (first_removed <= state_.commit_index)
      throw std::logic_error("attempt to truncate committed entries");
    for (LogIndex idx = first_removed; idx <= state_.last_log_index(); ++idx)
      uid_index_.erase(state_.entry_at(idx).uid);
    state_.log.resize(first_removed - 1);
  }

  CoreConfig config_;
  ServerState state_;
  std::set<ServerId> votes_granted_;
  std::map<std::string, LogIndex> uid_index_;
  std::mt19937_64 rng_;
};

}  // namespace raftdev

#endif  // RAFTDEV_CORE_HPP_
