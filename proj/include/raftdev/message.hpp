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

#ifndef RAFTDEV_MESSAGE_HPP_
#define RAFTDEV_MESSAGE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "raftdev/types.hpp"

namespace raftdev {

// Request/response payloads for the three service operations. Field names
// follow the wire schema in docs/wire.md one-to-one.

struct InsertCommandReq {
  std::string uid;
  std::string command;
  std::vector<std::string> parameters;
  bool operator==(const InsertCommandReq&) const = default;
};

/// `leaderAddress` is non-empty only on a not-leader redirect, in which case
/// `result` is empty. A response from the leader always carries a result.
struct InsertCommandResp {
  bool success = false;
  std::string result;
  std::string leader_address;
  bool operator==(const InsertCommandResp&) const = default;
};

/// Log entry as replicated on the wire: execution state never travels.
struct WireEntry {
  LogIndex index = 0;
  Term term = 0;
  std::string uid;
  std::string command;
  std::vector<std::string> parameters;
  bool operator==(const WireEntry&) const = default;
};

struct AppendEntriesReq {
  Term term = 0;
  std::string leader_id;
  LogIndex prev_log_index = 0;
  Term prev_log_term = 0;
  std::vector<WireEntry> entries;  // empty for a heartbeat
  LogIndex leader_commit = 0;
  bool operator==(const AppendEntriesReq&) const = default;
};

struct AppendEntriesResp {
  Term term = 0;
  bool success = false;
  bool operator==(const AppendEntriesResp&) const = default;
};

struct RequestVoteReq {
  Term term = 0;
  std::string candidate_id;
  LogIndex last_log_index = 0;
  Term last_log_term = 0;
  bool operator==(const RequestVoteReq&) const = default;
};

struct RequestVoteResp {
  Term term = 0;
  bool vote_granted = false;
  bool operator==(const RequestVoteResp&) const = default;
};

// Discovery announcements (single JSON datagrams over UDP multicast).

struct Hello {
  std::string endpoint_id;
  std::string device_type;
  std::string service_address;
  bool operator==(const Hello&) const = default;
};

struct Bye {
  std::string endpoint_id;
  bool operator==(const Bye&) const = default;
};

struct Probe {
  std::string device_type;
  bool operator==(const Probe&) const = default;
};

struct ProbeMatch {
  std::string endpoint_id;
  std::string device_type;
  std::string service_address;
  bool operator==(const ProbeMatch&) const = default;
};

/// Sent by a client to the benchmark manager when its workload finishes.
struct EndOfWorkload {
  std::string client_id;
  std::uint32_t iterations_completed = 0;
  bool partial = false;
  bool operator==(const EndOfWorkload&) const = default;
};

// Manager <-> server control plane (see docs/wire.md).

struct AssignConfigReq {
  std::string role;  // "leader" or "follower"
  Term term = 0;
  std::string voted_for;
  std::string current_leader;
  std::vector<std::string> peers;  // service addresses, self excluded
  int election_timeout_ms = 0;  // initial value, drawn by the manager
  int election_timeout_min_ms = 150;  // re-draw range for later elections
  int election_timeout_max_ms = 300;
  std::string heartbeat_mode;  // "safe" or "paper"
  bool operator==(const AssignConfigReq&) const = default;
};

struct AssignConfigResp {
  bool ok = false;
  bool operator==(const AssignConfigResp&) const = default;
};

struct StartReq {
  bool operator==(const StartReq&) const = default;
};

struct StartResp {
  bool ok = false;
  bool operator==(const StartResp&) const = default;
};

struct DumpReq {
  bool operator==(const DumpReq&) const = default;
};

struct AppliedUid {
  std::string result;
  bool success = false;
  bool operator==(const AppliedUid&) const = default;
};

/// Full audit snapshot of one server: log, cursors and state-machine content,
/// plus the steady-clock commit timeline used for availability measurements.
struct DumpResp {
  std::string id;
  std::string role;
  Term current_term = 0;
  LogIndex commit_index = 0;
  LogIndex last_applied = 0;
  std::vector<WireEntry> log;
  std::map<std::string, std::string> kv_entries;
  std::map<std::string, AppliedUid> applied_uids;
  std::vector<std::pair<LogIndex, std::int64_t>> commit_times_ms;
  bool operator==(const DumpResp&) const = default;
};

struct WriteStatsReq {
  std::string path;
  bool operator==(const WriteStatsReq&) const = default;
};

struct WriteStatsResp {
  bool ok = false;
  bool operator==(const WriteStatsResp&) const = default;
};

struct ShutdownReq {
  bool operator==(const ShutdownReq&) const = default;
};

struct ShutdownResp {
  bool ok = false;
  bool operator==(const ShutdownResp&) const = default;
};

using MessageBody =
    std::variant<InsertCommandReq, InsertCommandResp, AppendEntriesReq,
                 AppendEntriesResp, RequestVoteReq, RequestVoteResp, Hello, Bye,
                 Probe, ProbeMatch, EndOfWorkload, AssignConfigReq,
                 AssignConfigResp, StartReq, StartResp, DumpReq, DumpResp,
                 WriteStatsReq, WriteStatsResp, ShutdownReq, ShutdownResp>;

enum class MsgType {
  InsertCommandReq,
  InsertCommandResp,
  AppendEntriesReq,
  AppendEntriesResp,
  RequestVoteReq,
  RequestVoteResp,
  Hello,
  Bye,
  Probe,
  ProbeMatch,
  EndOfWorkload,
  AssignConfigReq,
  AssignConfigResp,
  StartReq,
  StartResp,
  DumpReq,
  DumpResp,
  WriteStatsReq,
  WriteStatsResp,
  ShutdownReq,
  ShutdownResp,
};

/// Wire envelope. A response reuses the request's msgId; that is the only
/// correlation mechanism.
struct Message {
  std::string msg_id;
  std::string sender;
  MessageBody body;

  MsgType type() const { return static_cast<MsgType>(body.index()); }

  template <typename T>
  const T& as() const {
    return std::get<T>(body);
  }
  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(body);
  }

  bool operator==(const Message&) const = default;
};

inline const char* to_string(MsgType t) {
  static const char* names[] = {
      "InsertCommandReq", "InsertCommandResp", "AppendEntriesReq",
      "AppendEntriesResp", "RequestVoteReq",   "RequestVoteResp",
      "Hello",            "Bye",               "Probe",
      "ProbeMatch",       "EndOfWorkload",     "AssignConfigReq",
      "AssignConfigResp", "StartReq",          "StartResp",
      "DumpReq",          "DumpResp",          "WriteStatsReq",
      "WriteStatsResp",   "ShutdownReq",       "ShutdownResp"};
  return names[static_cast<int>(t)];
}

inline WireEntry to_wire(const LogEntry& e) {
  return WireEntry{e.index, e.term, e.uid, e.command, e.parameters};
}

inline LogEntry from_wire(const WireEntry& w) {
  LogEntry e;
  e.index = w.index;
  e.term = w.term;
  e.uid = w.uid;
  e.command = w.command;
  e.parameters = w.parameters;
  return e;
}

}  // namespace raftdev

#endif  // RAFTDEV_MESSAGE_HPP_
