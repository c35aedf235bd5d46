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

#include "raftdev/simnet.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace raftdev::sim {
namespace {

std::string violations_to_string(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs)
    out += v.invariant + " @" + std::to_string(v.time_ms) + ": " + v.detail + "\n";
  return out;
}

int count_leaders(const SimResult& r) {
  int leaders = 0;
  for (const auto& rep : r.replicas)
    if (rep.alive && rep.state.role == Role::Leader) ++leaders;
  return leaders;
}

TEST(SimNet, GreenPathOneCommandCommitsEverywhere) {
  Schedule s;
  s.seed = 1;
  s.delay_min_ms = 0;
  s.delay_max_ms = 3;
  s.duration_ms = 2000;
  s.client_ops.push_back({500, "PUT", {"k", "v"}});

  SimResult r = run_schedule(3, s, true);
  EXPECT_TRUE(r.violations.empty()) << violations_to_string(r.violations);
  EXPECT_EQ(count_leaders(r), 1);
  ASSERT_EQ(r.client_ops.size(), 1u);
  EXPECT_TRUE(r.client_ops[0].completed);
  EXPECT_TRUE(r.client_ops[0].success);
  EXPECT_EQ(r.client_ops[0].result, "OK");
  for (const auto& rep : r.replicas) {
    ASSERT_TRUE(rep.alive);
    EXPECT_GE(rep.state.last_applied, 1u);
    ASSERT_TRUE(rep.kv_entries.contains("k"));
    EXPECT_EQ(rep.kv_entries.at("k"), "v");
  }
}

TEST(SimNet, LeaderCrashRecoversWithinTwoElectionTimeouts) {
  Schedule s;
  s.seed = 23;
  s.delay_min_ms = 0;
  s.delay_max_ms = 5;
  s.duration_ms = 3000;
  s.crashes.push_back({500, 0, /*leader_target=*/true});
  for (int i = 0; i < 6; ++i)
    s.client_ops.push_back({200 + i * 300, "PUT",
                            {"k" + std::to_string(i), "v"}});

  SimResult r = run_schedule(5, s, true);
  EXPECT_TRUE(r.violations.empty()) << violations_to_string(r.violations);

  std::int64_t crash_at = -1;
  std::int64_t new_leader_at = -1;
  for (const auto& e : r.trace) {
    if (e.kind == TraceKind::Crash) crash_at = e.time_ms;
    if (e.kind == TraceKind::RoleChange && e.detail == "Leader" &&
        crash_at >= 0 && new_leader_at < 0)
      new_leader_at = e.time_ms;
  }
  ASSERT_GE(crash_at, 500);
  ASSERT_GE(new_leader_at, crash_at);
  EXPECT_LE(new_leader_at, crash_at + 2 * 300)
      << "new leader must emerge within two maximum election timeouts";
  for (const auto& op : r.client_ops) EXPECT_TRUE(op.completed) << op.uid;
}

TEST(SimNet, SymmetricPartitionOnlyMajoritySideCommits) {
  Schedule s;
  s.seed = 5;
  s.delay_min_ms = 0;
  s.delay_max_ms = 3;
  s.duration_ms = 4000;
  s.partitions.push_back({600, {{0, 1}, {2, 3, 4}}});
  for (int i = 0; i < 5; ++i)
    s.client_ops.push_back({900 + i * 200, "PUT",
                            {"p" + std::to_string(i), "v"}});

  SimResult r = run_schedule(5, s, true);
  EXPECT_TRUE(r.violations.empty()) << violations_to_string(r.violations);

  // After the split settles, commit progress happens on the majority side only.
  for (const auto& e : r.trace) {
    if (e.kind != TraceKind::Commit) continue;
    if (e.time_ms > 600 + 50)
      EXPECT_GE(e.a, 2) << "minority-side server " << e.a
                        << " advanced its commit index at " << e.time_ms;
  }
  bool majority_committed_late = false;
  for (const auto& e : r.trace)
    if (e.kind == TraceKind::Commit && e.a >= 2 && e.time_ms > 900)
      majority_committed_late = true;
  EXPECT_TRUE(majority_committed_late);
  for (const auto& op : r.client_ops) EXPECT_TRUE(op.completed) << op.uid;
}

TEST(SimNet, CrashedServerLosesStateAndCatchesBackUp) {
  Schedule s;
  s.seed = 9;
  s.delay_min_ms = 0;
  s.delay_max_ms = 4;
  s.duration_ms = 4000;
  s.crashes.push_back({800, 1});
  s.restarts.push_back({1600, 1});
  for (int i = 0; i < 8; ++i)
    s.client_ops.push_back({300 + i * 150, "PUT",
                            {"k" + std::to_string(i), "v" + std::to_string(i)}});

  SimResult r = run_schedule(3, s, true);
  EXPECT_TRUE(r.violations.empty()) << violations_to_string(r.violations);
  for (const auto& op : r.client_ops) EXPECT_TRUE(op.completed) << op.uid;
  // The restarted follower converges to the leader's applied state.
  ASSERT_TRUE(r.replicas[1].alive);
  int leader = -1;
  for (int i = 0; i < 3; ++i)
    if (r.replicas[i].alive && r.replicas[i].state.role == Role::Leader)
      leader = i;
  ASSERT_NE(leader, -1);
  EXPECT_EQ(r.replicas[1].state.last_log_index(),
            r.replicas[leader].state.last_log_index());
  EXPECT_EQ(r.replicas[1].kv_entries, r.replicas[leader].kv_entries);
}

TEST(SimNet, TracesAreByteIdenticalAcrossReruns) {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    Schedule s = random_schedule(seed);
    SimResult a = run_schedule(5, s, true);
    SimResult b = run_schedule(5, s, true);
    ASSERT_EQ(trace_to_ndjson(a.trace, 5), trace_to_ndjson(b.trace, 5))
        << "seed " << seed;
  }
}

TEST(SimNet, SoakMiniHundredSeeds) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Schedule s = random_schedule(seed);
    SimResult r = run_schedule(5, s, false);
    ASSERT_TRUE(r.violations.empty())
        << "seed " << seed << "\n" << violations_to_string(r.violations);
  }
}

TEST(SimNet, LivenessAfterFaultsCease) {
  // Faults stop at 600 ms; every command proposed after that must commit by
  // fault-end + 10 x max election timeout.
  Schedule s;
  s.seed = 77;
  s.delay_min_ms = 0;
  s.delay_max_ms = 20;
  s.duration_ms = 600 + 10 * 300 + 500;
  s.crashes.push_back({300, 4});
  s.crashes.push_back({600, 3});
  for (int i = 0; i < 5; ++i)
    s.client_ops.push_back({700 + i * 100, "PUT",
                            {"k" + std::to_string(i), "v"}});

  SimResult r = run_schedule(5, s, true);
  EXPECT_TRUE(r.violations.empty()) << violations_to_string(r.violations);
  EXPECT_EQ(count_leaders(r), 1);
  int leader = -1;
  for (int i = 0; i < 5; ++i)
    if (r.replicas[i].alive && r.replicas[i].state.role == Role::Leader)
      leader = i;
  ASSERT_NE(leader, -1);
  for (const auto& op : r.client_ops) {
    EXPECT_TRUE(op.completed) << op.uid;
    bool in_log = false;
    for (LogIndex i = 1; i <= r.replicas[leader].state.commit_index; ++i)
      if (r.replicas[leader].state.entry_at(i).uid == op.uid) in_log = true;
    EXPECT_TRUE(in_log) << op.uid << " missing from the leader's committed log";
  }
  // Commit latency bound: last commit of these ops within the window.
  std::int64_t last_commit = 0;
  for (const auto& e : r.trace)
    if (e.kind == TraceKind::Commit) last_commit = std::max(last_commit, e.time_ms);
  EXPECT_LE(last_commit, 600 + 10 * 300);
}

TEST(CheckInvariants, PlantedLogMatchingDefectDetected) {
  using testutil::make_entry;
  ServerView a{"S0", Role::Follower, 2, 0, {}};
  ServerView b{"S1", Role::Follower, 2, 0, {}};
  a.log = {make_entry(1, 1, "x"), make_entry(2, 1, "y"), make_entry(3, 2, "z")};
  b.log = {make_entry(1, 1, "x"), make_entry(2, 1, "DIFFERENT"),
           make_entry(3, 2, "z")};
  auto violations = check_invariants({a, b});
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations[0].invariant, "LogMatching");
}

TEST(CheckInvariants, PlantedTwoLeadersSameTermDetected) {
  ServerView a{"S0", Role::Leader, 7, 0, {}};
  ServerView b{"S1", Role::Leader, 7, 0, {}};
  auto violations = check_invariants({a, b});
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].invariant, "ElectionSafety");
}

TEST(CheckInvariants, CleanStatesProduceNoViolations) {
  using testutil::make_entry;
  ServerView a{"S0", Role::Leader, 3, 2,
               {make_entry(1, 1, "x"), make_entry(2, 3, "y")}};
  ServerView b{"S1", Role::Follower, 3, 2,
               {make_entry(1, 1, "x"), make_entry(2, 3, "y")}};
  EXPECT_TRUE(check_invariants({a, b}).empty());
}

TEST(ScheduleJson, RoundTrip) {
  Schedule s = random_schedule(4242);
  s.crashes.push_back({500, 0, true});
  nlohmann::json j = to_json(s);
  Schedule back = schedule_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
}

}  // namespace
}  // namespace raftdev::sim
