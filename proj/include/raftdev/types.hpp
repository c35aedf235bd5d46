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

#ifndef RAFTDEV_TYPES_HPP_
#define RAFTDEV_TYPES_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace raftdev {

using Term = std::uint64_t;
using LogIndex = std::uint64_t;

// Servers are identified by their service address ("host:port"); that is the
// value carried in leaderId / candidateId / votedFor on the wire.
using ServerId = std::string;

enum class Role { Follower, Candidate, Leader };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Follower: return "Follower";
    case Role::Candidate: return "Candidate";
    case Role::Leader: return "Leader";
  }
  return "?";
}

/// One replicated command. `result`/`success` stay unset until the entry has
/// been applied on this server; `responses_needed` is the leader-side majority
/// latch and is meaningless on followers.
struct LogEntry {
  LogIndex index = 0;  // 1-based position in the log
  Term term = 0;
  std::string uid;
  std::string command;
  std::vector<std::string> parameters;
  std::optional<std::string> result;
  std::optional<bool> success;
  std::uint32_t responses_needed = 0;

  bool applied() const { return result.has_value(); }
};

/// A server's role plus all Raft bookkeeping. The log is kept as a dense
/// vector where log[i] holds the entry with index i+1.
struct ServerState {
  Role role = Role::Follower;
  Term current_term = 0;
  std::optional<ServerId> voted_for;
  std::optional<ServerId> current_leader;
  std::vector<LogEntry> log;
  LogIndex commit_index = 0;
  LogIndex last_applied = 0;
  std::map<ServerId, LogIndex> next_index;
  std::map<ServerId, LogIndex> match_index;
  int election_timeout_ms = 0;

  LogIndex last_log_index() const { return log.size(); }

  Term last_log_term() const { return log.empty() ? 0 : log.back().term; }

  const LogEntry& entry_at(LogIndex index) const { return log.at(index - 1); }
  LogEntry& entry_at(LogIndex index) { return log.at(index - 1); }

  /// Term of the entry at `index`, with the index-0 sentinel mapping to 0.
  Term term_at(LogIndex index) const {
    if (index == 0) return 0;
    return entry_at(index).term;
  }
};

/// floor(n/2)+1 votes elect a leader.
inline std::uint32_t majority_threshold(std::uint32_t cluster_size) {
  if (cluster_size == 0) throw std::invalid_argument("cluster size must be >= 1");
  return cluster_size / 2 + 1;
}

/// Follower acks required before a leader-created entry commits; the leader
/// counts itself, so floor(n/2) followers complete the majority.
inline std::uint32_t needed_follower_responses(std::uint32_t cluster_size) {
  if (cluster_size == 0) throw std::invalid_argument("cluster size must be >= 1");
  return cluster_size / 2;
}

}  // namespace raftdev

#endif  // RAFTDEV_TYPES_HPP_
