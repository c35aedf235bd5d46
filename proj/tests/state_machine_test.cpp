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

#include "raftdev/state_machine.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "test_util.hpp"

namespace raftdev {
namespace {

using testutil::make_entry;

std::vector<LogEntry> random_committed_log(std::mt19937_64& rng, size_t len) {
  std::vector<LogEntry> log;
  for (size_t i = 1; i <= len; ++i) {
    std::string key = "k" + std::to_string(rng() % 12);
    switch (rng() % 5) {
      case 0:
        log.push_back(make_entry(i, 1, "u" + std::to_string(i), "DEL", {key}));
        break;
      case 1:
        log.push_back(make_entry(i, 1, "u" + std::to_string(i), "NOP", {}));
        break;
      case 2:
        log.push_back(make_entry(i, 1, "u" + std::to_string(i), "PUT", {key}));
        break;
      default:
        log.push_back(make_entry(i, 1, "u" + std::to_string(i), "PUT",
                                 {key, "v" + std::to_string(rng() % 100)}));
    }
  }
  return log;
}

// Replay oracle: applying a committed prefix to a fresh machine must
// reproduce the state of any replica that applied it incrementally, with
// identical per-entry outputs.
TEST(KvStateMachine, ReplayEquivalenceOverRandomSequences) {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 50; ++round) {
    auto log = random_committed_log(rng, 1 + rng() % 120);
    KvStateMachine incremental;
    std::vector<std::pair<bool, std::string>> outputs;
    for (const auto& e : log) outputs.push_back(incremental.insert(e));

    KvStateMachine replay;
    for (size_t i = 0; i < log.size(); ++i)
      ASSERT_EQ(replay.insert(log[i]), outputs[i]) << "entry " << i;
    ASSERT_TRUE(replay == incremental);
  }
}

TEST(KvStateMachine, FailedInsertLeavesStateUntouched) {
  std::mt19937_64 rng(43);
  KvStateMachine sm;
  sm.insert(make_entry(1, 1, "u1", "PUT", {"a", "1"}));
  auto entries_before = sm.entries();
  auto [ok1, r1] = sm.insert(make_entry(2, 1, "u2", "PUT", {"only-one"}));
  EXPECT_FALSE(ok1);
  EXPECT_EQ(r1, "BAD_ARITY");
  auto [ok2, r2] = sm.insert(make_entry(3, 1, "u3", "FROB", {"a"}));
  EXPECT_FALSE(ok2);
  EXPECT_EQ(r2, "BAD_COMMAND");
  auto [ok3, r3] = sm.insert(make_entry(4, 1, "u4", "DEL", {"missing"}));
  EXPECT_FALSE(ok3);
  EXPECT_EQ(r3, "NOT_FOUND");
  EXPECT_EQ(sm.entries(), entries_before);
}

TEST(KvStateMachine, AppliedUidOutcomesAreRecorded) {
  KvStateMachine sm;
  sm.insert(make_entry(1, 1, "uid-a", "PUT", {"k", "v"}));
  sm.insert(make_entry(2, 1, "uid-b", "DEL", {"nope"}));
  ASSERT_TRUE(sm.applied_uids().contains("uid-a"));
  EXPECT_EQ(sm.applied_uids().at("uid-a"),
            (KvStateMachine::AppliedOutcome{"OK", true}));
  EXPECT_EQ(sm.applied_uids().at("uid-b"),
            (KvStateMachine::AppliedOutcome{"NOT_FOUND", false}));
}

TEST(KvStateMachine, JournalRecordsAppliedEntries) {
  std::string path = ::testing::TempDir() + "journal_test.log";
  std::remove(path.c_str());
  {
    KvStateMachine sm(path);
    sm.insert(make_entry(1, 2, "u|1", "PUT", {"k,1", "v\n2"}));
    sm.insert(make_entry(2, 2, "u2", "DEL", {"k,1"}));
  }
  std::ifstream in(path);
  std::string line1, line2, extra;
  ASSERT_TRUE(std::getline(in, line1));
  ASSERT_TRUE(std::getline(in, line2));
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(line1, "1|2|u%7C1|PUT|k%2C1,v%0A2");
  EXPECT_EQ(line2, "2|2|u2|DEL|k%2C1");
  std::remove(path.c_str());
}

TEST(KvStateMachine, TerminateLifecycle) {
  KvStateMachine sm;
  sm.insert(make_entry(1, 1, "u1", "PUT", {"k", "v"}));
  sm.terminate();
  EXPECT_THROW(sm.insert(make_entry(2, 1, "u2", "PUT", {"k", "v"})),
               std::logic_error);
  EXPECT_THROW(sm.terminate(), std::logic_error);
}

}  // namespace
}  // namespace raftdev
