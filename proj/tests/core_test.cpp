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

#include "raftdev/core.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace raftdev {
namespace {

CoreConfig config_for(std::string self, std::vector<std::string> peers,
                      std::uint64_t seed = 1) {
  CoreConfig c;
  c.self = std::move(self);
  c.peers = std::move(peers);
  c.rng_seed = seed;
  return c;
}

// Feeds a follower an AppendEntries stream that makes it leader-eligible.
void load_log(RaftCore& core, const std::vector<std::pair<Term, std::string>>& entries) {
  AppendEntriesReq req;
  req.term = entries.empty() ? 0 : entries.back().first;
  req.leader_id = "seed-leader";
  req.prev_log_index = 0;
  req.prev_log_term = 0;
  LogIndex idx = 1;
  for (const auto& [term, uid] : entries)
    req.entries.push_back(WireEntry{idx++, term, uid, "PUT", {"k", "v"}});
  req.leader_commit = 0;
  auto [resp, actions] = core.handle_append_entries(req);
  ASSERT_TRUE(resp.success);
}

template <typename T>
int count_actions(const Actions& actions) {
  int n = 0;
  for (const auto& a : actions)
    if (std::holds_alternative<T>(a)) ++n;
  return n;
}

TEST(CoreLogMatching, ConflictTruncatesSuffixHandTrace) {
  // Local log [(1,t1),(2,t1),(3,t2)]; the new leader sends entry (3,t3) after
  // a matching (2,t1) prefix. Hand-traced truncation rule: entry 3 conflicts,
  // is deleted together with everything after it, then the new entry lands.
  RaftCore core(config_for("S1", {"S2", "S3"}));
  load_log(core, {{1, "a"}, {1, "b"}, {2, "c"}});
  ASSERT_EQ(core.state().last_log_index(), 3u);

  AppendEntriesReq req;
  req.term = 3;
  req.leader_id = "S2";
  req.prev_log_index = 2;
  req.prev_log_term = 1;
  req.entries = {WireEntry{3, 3, "d", "PUT", {"k", "v"}}};
  req.leader_commit = 0;
  auto [resp, actions] = core.handle_append_entries(req);
  EXPECT_TRUE(resp.success);
  ASSERT_EQ(core.state().last_log_index(), 3u);
  EXPECT_EQ(core.state().entry_at(1).term, 1u);
  EXPECT_EQ(core.state().entry_at(2).term, 1u);
  EXPECT_EQ(core.state().entry_at(3).term, 3u);
  EXPECT_EQ(core.state().entry_at(3).uid, "d");
  // the truncated uid is forgotten, the new one known
  EXPECT_FALSE(core.index_of_uid("c").has_value());
  EXPECT_EQ(core.index_of_uid("d"), LogIndex{3});
}

TEST(CoreLogMatching, OverlappingEntriesAreIdempotent) {
  RaftCore core(config_for("S1", {"S2", "S3"}));
  load_log(core, {{1, "a"}, {1, "b"}});
  // Re-send of entries 1..2 plus a new entry 3 must not disturb the prefix.
  AppendEntriesReq req;
  req.term = 1;
  req.leader_id = "seed-leader";
  req.prev_log_index = 0;
  req.prev_log_term = 0;
  req.entries = {WireEntry{1, 1, "a", "PUT", {"k", "v"}},
                 WireEntry{2, 1, "b", "PUT", {"k", "v"}},
                 WireEntry{3, 1, "c", "PUT", {"k", "v"}}};
  req.leader_commit = 0;
  auto [resp, actions] = core.handle_append_entries(req);
  EXPECT_TRUE(resp.success);
  EXPECT_EQ(core.state().last_log_index(), 3u);
  EXPECT_EQ(core.state().entry_at(1).uid, "a");
  EXPECT_EQ(core.state().entry_at(3).uid, "c");
}

TEST(CoreElection, TimeoutDrawStaysInRange) {
  RaftCore core(config_for("S1", {"S2", "S3"}, 99));
  for (int i = 0; i < 10000; ++i) {
    core.on_election_timeout();
    int t = core.state().election_timeout_ms;
    ASSERT_GE(t, 150);
    ASSERT_LE(t, 300);
  }
}

TEST(CoreElection, WinsAfterMajorityGrants) {
  RaftCore core(config_for("S1", {"S2", "S3", "S4", "S5"}));
  auto actions = core.on_election_timeout();
  EXPECT_EQ(core.state().role, Role::Candidate);
  EXPECT_EQ(count_actions<BroadcastAction>(actions), 1);

  auto a1 = core.on_vote_response("S2", {core.state().current_term, true});
  EXPECT_EQ(core.state().role, Role::Candidate) << "2 of 5 is not a majority";
  EXPECT_EQ(count_actions<BecomeLeaderAction>(a1), 0);

  auto a2 = core.on_vote_response("S3", {core.state().current_term, true});
  EXPECT_EQ(core.state().role, Role::Leader);
  EXPECT_EQ(count_actions<BecomeLeaderAction>(a2), 1);
  // immediate empty heartbeat to every peer plus heartbeat timer
  EXPECT_EQ(count_actions<SendAction>(a2), 4);
  EXPECT_EQ(count_actions<CancelTimerAction>(a2), 1);
  for (const auto& [peer, next] : core.state().next_index)
    EXPECT_EQ(next, core.state().last_log_index() + 1);
}

TEST(CoreElection, DuplicateGrantFromSamePeerDoesNotCount) {
  RaftCore core(config_for("S1", {"S2", "S3", "S4", "S5"}));
  core.on_election_timeout();
  Term term = core.state().current_term;
  core.on_vote_response("S2", {term, true});
  core.on_vote_response("S2", {term, true});
  EXPECT_EQ(core.state().role, Role::Candidate);
}

TEST(CoreElection, GrantFromUnknownPeerIgnored) {
  RaftCore core(config_for("S1", {"S2", "S3", "S4", "S5"}));
  core.on_election_timeout();
  Term term = core.state().current_term;
  core.on_vote_response("stranger", {term, true});
  core.on_vote_response("other", {term, true});
  EXPECT_EQ(core.state().role, Role::Candidate);
}

TEST(CoreElection, StaleGrantFromEarlierTermIgnored) {
  RaftCore core(config_for("S1", {"S2", "S3"}));
  core.on_election_timeout();  // term 1
  core.on_election_timeout();  // term 2, fresh election
  core.on_vote_response("S2", {1, true});
  EXPECT_EQ(core.state().role, Role::Candidate);
  core.on_vote_response("S2", {2, true});
  EXPECT_EQ(core.state().role, Role::Leader);
}

TEST(CoreElection, SingleServerClusterWinsImmediately) {
  RaftCore core(config_for("S1", {}));
  auto actions = core.on_election_timeout();
  EXPECT_EQ(core.state().role, Role::Leader);
  EXPECT_EQ(count_actions<BecomeLeaderAction>(actions), 1);
}

TEST(CoreElection, LeaderRejectsElectionTimeout) {
  RaftCore core(config_for("S1", {}));
  core.on_election_timeout();
  ASSERT_EQ(core.state().role, Role::Leader);
  EXPECT_THROW(core.on_election_timeout(), std::logic_error);
}

TEST(CoreVote, UpToDateCheckComparesTermThenIndex) {
  RaftCore core(config_for("S1", {"S2", "S3"}));
  load_log(core, {{1, "a"}, {2, "b"}});  // last (term=2, index=2)

  // lower last term loses even with a longer log
  auto [r1, a1] = core.handle_request_vote({5, "S2", 10, 1});
  EXPECT_FALSE(r1.vote_granted);
  // equal term, shorter log loses
  auto [r2, a2] = core.handle_request_vote({6, "S2", 1, 2});
  EXPECT_FALSE(r2.vote_granted);
  // equal term, equal index wins
  auto [r3, a3] = core.handle_request_vote({7, "S2", 2, 2});
  EXPECT_TRUE(r3.vote_granted);
  EXPECT_EQ(count_actions<ArmTimerAction>(a3), 1) << "grant resets the timer";
}

TEST(CoreCommit, ThreeServerEntryCommitsOnFirstAck) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  core.on_election_timeout();
  core.on_vote_response("F1", {core.state().current_term, true});
  ASSERT_EQ(core.state().role, Role::Leader);

  auto outcome = core.propose("uid-1", "PUT", {"k", "v"});
  ASSERT_EQ(outcome.kind, ProposeOutcome::Kind::Pending);
  EXPECT_EQ(outcome.index, 1u);
  EXPECT_EQ(core.state().entry_at(1).responses_needed, 1u);
  EXPECT_EQ(core.state().commit_index, 0u);

  auto tick = core.on_heartbeat_tick();
  ASSERT_EQ(count_actions<SendAction>(tick), 2);
  const auto& send = std::get<SendAction>(tick[0]);
  const auto& req = std::get<AppendEntriesReq>(send.request);
  EXPECT_EQ(req.entries.size(), 1u);

  auto acts = core.on_append_response("F1", {core.state().current_term, true},
                                      0, 1);
  EXPECT_EQ(core.state().commit_index, 1u);
  EXPECT_EQ(count_actions<ApplyCommittedAction>(acts), 1);
  ASSERT_EQ(count_actions<ReplyToClientAction>(acts), 1);

  KvStateMachine sm;
  auto applied = core.apply_committed(sm);
  ASSERT_EQ(applied.size(), 1u);
  EXPECT_TRUE(applied[0].success);
  EXPECT_EQ(applied[0].result, "OK");
  EXPECT_EQ(core.state().last_applied, 1u);
}

TEST(CoreCommit, DuplicateAckDoesNotDoubleDecrement) {
  RaftCore core(config_for("L", {"F1", "F2", "F3", "F4"}));
  core.on_election_timeout();
  Term term = core.state().current_term;
  core.on_vote_response("F1", {term, true});
  core.on_vote_response("F2", {term, true});
  ASSERT_EQ(core.state().role, Role::Leader);

  core.propose("uid-1", "PUT", {"k", "v"});
  EXPECT_EQ(core.state().entry_at(1).responses_needed, 2u);
  core.on_append_response("F1", {term, true}, 0, 1);
  core.on_append_response("F1", {term, true}, 0, 1);  // duplicate delivery
  EXPECT_EQ(core.state().commit_index, 0u) << "one follower acked twice";
  core.on_append_response("F2", {term, true}, 0, 1);
  EXPECT_EQ(core.state().commit_index, 1u);
}

TEST(CoreCommit, OldTermEntriesCommitOnlyViaCurrentTermEntry) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  // follower picks up two term-1 entries, then wins an election at term 2
  load_log(core, {{1, "a"}, {1, "b"}});
  core.on_election_timeout();
  Term term = core.state().current_term;
  ASSERT_EQ(term, 2u);
  core.on_vote_response("F1", {term, true});
  ASSERT_EQ(core.state().role, Role::Leader);

  // F1 acknowledges the old entries; they must not commit by counting
  core.on_append_response("F1", {term, true}, 0, 2);
  EXPECT_EQ(core.state().commit_index, 0u);

  // a current-term entry commits and carries the old ones with it
  core.propose("c", "PUT", {"k", "v"});
  core.on_append_response("F1", {term, true}, 2, 1);
  EXPECT_EQ(core.state().commit_index, 3u);
}

TEST(CorePropose, DuplicateUidWhileUnappliedJoinsSameEntry) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  core.on_election_timeout();
  core.on_vote_response("F1", {core.state().current_term, true});

  auto first = core.propose("uid-1", "PUT", {"k", "v"});
  auto second = core.propose("uid-1", "PUT", {"k", "v"});
  EXPECT_EQ(second.kind, ProposeOutcome::Kind::Pending);
  EXPECT_EQ(second.index, first.index);
  EXPECT_EQ(core.state().last_log_index(), 1u);
}

TEST(CoreStepdown, AppendResponseWithNewerTermDemotes) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  core.on_election_timeout();
  core.on_vote_response("F1", {core.state().current_term, true});
  ASSERT_EQ(core.state().role, Role::Leader);

  auto acts = core.on_append_response("F1", {8, false}, 0, 0);
  EXPECT_EQ(core.state().role, Role::Follower);
  EXPECT_EQ(core.state().current_term, 8u);
  EXPECT_EQ(count_actions<BecomeFollowerAction>(acts), 1);
  EXPECT_EQ(count_actions<CancelTimerAction>(acts), 1);
}

TEST(CoreStepdown, EqualTermAppendEntriesDemotesCandidate) {
  RaftCore core(config_for("S1", {"S2", "S3"}));
  core.on_election_timeout();
  ASSERT_EQ(core.state().role, Role::Candidate);
  Term term = core.state().current_term;
  auto [resp, acts] = core.handle_append_entries({term, "S2", 0, 0, {}, 0});
  EXPECT_TRUE(resp.success);
  EXPECT_EQ(core.state().role, Role::Follower);
  EXPECT_EQ(core.state().current_leader, "S2");
}

TEST(CoreHeartbeat, FailedConsistencyCheckStillResetsTimer) {
  RaftCore core(config_for("S1", {"S2", "S3"}));
  auto [resp, acts] = core.handle_append_entries({1, "S2", 5, 1, {}, 0});
  EXPECT_FALSE(resp.success);
  EXPECT_EQ(count_actions<ArmTimerAction>(acts), 1)
      << "a live leader's invocation interrupts the timer even on mismatch";
}

TEST(CoreHeartbeat, NextIndexBacktracksByOnePerRejection) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  load_log(core, {{1, "a"}, {1, "b"}, {1, "c"}});
  core.on_election_timeout();
  Term term = core.state().current_term;
  core.on_vote_response("F1", {term, true});
  ASSERT_EQ(core.state().next_index.at("F2"), 4u);

  core.on_append_response("F2", {term, false}, 3, 0);
  EXPECT_EQ(core.state().next_index.at("F2"), 3u);
  core.on_append_response("F2", {term, false}, 2, 0);
  core.on_append_response("F2", {term, false}, 1, 0);
  EXPECT_EQ(core.state().next_index.at("F2"), 1u);
  core.on_append_response("F2", {term, false}, 0, 0);
  EXPECT_EQ(core.state().next_index.at("F2"), 1u) << "floor at 1";

  auto tick = core.on_heartbeat_tick();
  bool found = false;
  for (const auto& a : tick) {
    if (auto* send = std::get_if<SendAction>(&a); send && send->target == "F2") {
      const auto& req = std::get<AppendEntriesReq>(send->request);
      EXPECT_EQ(req.prev_log_index, 0u);
      EXPECT_EQ(req.entries.size(), 3u);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(CoreDeterminism, SameSeedSameEventsSameOutputs) {
  auto run = [] {
    RaftCore core(config_for("S1", {"S2", "S3"}, 77));
    std::vector<int> timeouts;
    core.start();
    for (int i = 0; i < 5; ++i) {
      core.on_election_timeout();
      timeouts.push_back(core.state().election_timeout_ms);
    }
    core.on_vote_response("S2", {core.state().current_term, true});
    core.propose("u1", "PUT", {"k", "v"});
    core.on_append_response("S2", {core.state().current_term, true}, 0, 1);
    return std::make_tuple(timeouts, core.state().current_term,
                           core.state().commit_index,
                           core.state().log.size());
  };
  EXPECT_EQ(run(), run());
}

TEST(CoreMajority, ThresholdArithmetic) {
  EXPECT_EQ(majority_threshold(5), 3u);
  EXPECT_EQ(needed_follower_responses(5), 2u);
  EXPECT_EQ(majority_threshold(3), 2u);
  EXPECT_EQ(needed_follower_responses(3), 1u);
  EXPECT_EQ(majority_threshold(1), 1u);
  EXPECT_EQ(needed_follower_responses(1), 0u);
  EXPECT_EQ(majority_threshold(4), 3u);
  EXPECT_EQ(needed_follower_responses(4), 2u);
  EXPECT_THROW(majority_threshold(0), std::invalid_argument);
  EXPECT_THROW(needed_follower_responses(0), std::invalid_argument);
}

TEST(CoreApply, ReplayOfCommittedPrefixReproducesState) {
  RaftCore core(config_for("L", {"F1", "F2"}));
  core.on_election_timeout();
  Term term = core.state().current_term;
  core.on_vote_response("F1", {term, true});
  KvStateMachine live;
  for (int i = 0; i < 30; ++i) {
    auto outcome = core.propose("u" + std::to_string(i), "PUT",
                                {"k" + std::to_string(i % 5), "v" + std::to_string(i)});
    ASSERT_EQ(outcome.kind, ProposeOutcome::Kind::Pending);
    core.on_append_response("F1", {term, true}, outcome.index - 1, 1);
    core.apply_committed(live);
  }
  ASSERT_EQ(core.state().last_applied, 30u);

  KvStateMachine replayed;
  for (LogIndex i = 1; i <= core.state().commit_index; ++i) {
    LogEntry fresh = core.state().entry_at(i);
    fresh.result.reset();
    fresh.success.reset();
    replayed.insert(fresh);
  }
  EXPECT_TRUE(replayed == live);
}

}  // namespace
}  // namespace raftdev
