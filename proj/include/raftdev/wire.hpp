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

#ifndef RAFTDEV_WIRE_HPP_
#define RAFTDEV_WIRE_HPP_

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "raftdev/message.hpp"

// Wire format: one UTF-8 JSON object per message, newline-terminated on
// byte-stream connections, one object per datagram for discovery. The schema
// (field names, required fields, one canonical example per type) is documented
// in docs/wire.md.

namespace raftdev {
namespace wire {

using nlohmann::json;

namespace detail {

struct DecodeFailure {
  std::string reason;
};

inline const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DecodeFailure{std::string("missing field: ") + key};
  return *it;
}

inline std::string req_str(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw DecodeFailure{std::string("not a string: ") + key};
  return v.get<std::string>();
}

inline bool req_bool(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_boolean()) throw DecodeFailure{std::string("not a bool: ") + key};
  return v.get<bool>();
}

inline std::uint64_t req_u64(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_unsigned())
    throw DecodeFailure{std::string("not an unsigned integer: ") + key};
  return v.get<std::uint64_t>();
}

inline int req_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer())
    throw DecodeFailure{std::string("not an integer: ") + key};
  return v.get<int>();
}

inline std::vector<std::string> req_str_list(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) throw DecodeFailure{std::string("not an array: ") + key};
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string())
      throw DecodeFailure{std::string("non-string element in: ") + key};
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline json entry_to_json(const WireEntry& e) {
  return json{{"index", e.index},
              {"term", e.term},
              {"uid", e.uid},
              {"command", e.command},
              {"parameters", e.parameters}};
}

inline WireEntry entry_from_json(const json& j) {
  if (!j.is_object()) throw DecodeFailure{"entry is not an object"};
  WireEntry e;
  e.index = req_u64(j, "index");
  e.term = req_u64(j, "term");
  e.uid = req_str(j, "uid");
  e.command = req_str(j, "command");
  e.parameters = req_str_list(j, "parameters");
  return e;
}

struct BodyToJson {
  json operator()(const InsertCommandReq& b) const {
    return {{"uid", b.uid}, {"command", b.command}, {"parameters", b.parameters}};
  }
  json operator()(const InsertCommandResp& b) const {
    return {{"success", b.success},
            {"result", b.result},
            {"leaderAddress", b.leader_address}};
  }
  json operator()(const AppendEntriesReq& b) const {
    json entries = json::array();
    for (const auto& e : b.entries) entries.push_back(entry_to_json(e));
    return {{"term", b.term},
            {"leaderId", b.leader_id},
            {"prevLogIndex", b.prev_log_index},
            {"prevLogTerm", b.prev_log_term},
            {"entries", std::move(entries)},
            {"leaderCommit", b.leader_commit}};
  }
  json operator()(const AppendEntriesResp& b) const {
    return {{"term", b.term}, {"success", b.success}};
  }
  json operator()(const RequestVoteReq& b) const {
    return {{"term", b.term},
            {"candidateId", b.candidate_id},
            {"lastLogIndex", b.last_log_index},
            {"lastLogTerm", b.last_log_term}};
  }
  json operator()(const RequestVoteResp& b) const {
    return {{"term", b.term}, {"voteGranted", b.vote_granted}};
  }
  json operator()(const Hello& b) const {
    return {{"endpointId", b.endpoint_id},
            {"deviceType", b.device_type},
            {"serviceAddress", b.service_address}};
  }
  json operator()(const Bye& b) const { return {{"endpointId", b.endpoint_id}}; }
  json operator()(const Probe& b) const {
    return {{"deviceType", b.device_type}};
  }
  json operator()(const ProbeMatch& b) const {
    return {{"endpointId", b.endpoint_id},
            {"deviceType", b.device_type},
            {"serviceAddress", b.service_address}};
  }
  json operator()(const EndOfWorkload& b) const {
    return {{"clientId", b.client_id},
            {"iterationsCompleted", b.iterations_completed},
            {"partial", b.partial}};
  }
  json operator()(const AssignConfigReq& b) const {
    return {{"role", b.role},
            {"term", b.term},
            {"votedFor", b.voted_for},
            {"currentLeader", b.current_leader},
            {"peers", b.peers},
            {"electionTimeoutMs", b.election_timeout_ms},
            {"electionTimeoutMinMs", b.election_timeout_min_ms},
            {"electionTimeoutMaxMs", b.election_timeout_max_ms},
            {"heartbeatMode", b.heartbeat_mode}};
  }
  json operator()(const AssignConfigResp& b) const { return {{"ok", b.ok}}; }
  json operator()(const StartReq&) const { return json::object(); }
  json operator()(const StartResp& b) const { return {{"ok", b.ok}}; }
  json operator()(const DumpReq&) const { return json::object(); }
  json operator()(const DumpResp& b) const {
    json log = json::array();
    for (const auto& e : b.log) log.push_back(entry_to_json(e));
    json uids = json::object();
    for (const auto& [uid, au] : b.applied_uids)
      uids[uid] = json{{"result", au.result}, {"success", au.success}};
    json commits = json::array();
    for (const auto& [index, at] : b.commit_times_ms)
      commits.push_back(json{{"index", index}, {"atMs", at}});
    return {{"id", b.id},
            {"role", b.role},
            {"term", b.current_term},
            {"commitIndex", b.commit_index},
            {"lastApplied", b.last_applied},
            {"log", std::move(log)},
            {"kvEntries", b.kv_entries},
            {"appliedUids", std::move(uids)},
            {"commitTimes", std::move(commits)}};
  }
  json operator()(const WriteStatsReq& b) const { return {{"path", b.path}}; }
  json operator()(const WriteStatsResp& b) const { return {{"ok", b.ok}}; }
  json operator()(const ShutdownReq&) const { return json::object(); }
  json operator()(const ShutdownResp& b) const { return {{"ok", b.ok}}; }
};

inline MessageBody body_from_json(MsgType type, const json& j) {
  if (!j.is_object()) throw DecodeFailure{"body is not an object"};
  switch (type) {
    case MsgType::InsertCommandReq:
      return InsertCommandReq{req_str(j, "uid"), req_str(j, "command"),
                              req_str_list(j, "parameters")};
    case MsgType::InsertCommandResp:
      return InsertCommandResp{req_bool(j, "success"), req_str(j, "result"),
                               req_str(j, "leaderAddress")};
    case MsgType::AppendEntriesReq: {
      AppendEntriesReq b;
      b.term = req_u64(j, "term");
      b.leader_id = req_str(j, "leaderId");
      b.prev_log_index = req_u64(j, "prevLogIndex");
      b.prev_log_term = req_u64(j, "prevLogTerm");
      const json& entries = require(j, "entries");
      if (!entries.is_array()) throw DecodeFailure{"entries is not an array"};
      for (const auto& e : entries) b.entries.push_back(entry_from_json(e));
      b.leader_commit = req_u64(j, "leaderCommit");
      return b;
    }
    case MsgType::AppendEntriesResp:
      return AppendEntriesResp{req_u64(j, "term"), req_bool(j, "success")};
    case MsgType::RequestVoteReq:
      return RequestVoteReq{req_u64(j, "term"), req_str(j, "candidateId"),
                            req_u64(j, "lastLogIndex"),
                            req_u64(j, "lastLogTerm")};
    case MsgType::RequestVoteResp:
      return RequestVoteResp{req_u64(j, "term"), req_bool(j, "voteGranted")};
    case MsgType::Hello:
      return Hello{req_str(j, "endpointId"), req_str(j, "deviceType"),
                   req_str(j, "serviceAddress")};
    case MsgType::Bye:
      return Bye{req_str(j, "endpointId")};
    case MsgType::Probe:
      return Probe{req_str(j, "deviceType")};
    case MsgType::ProbeMatch:
      return ProbeMatch{req_str(j, "endpointId"), req_str(j, "deviceType"),
                        req_str(j, "serviceAddress")};
    case MsgType::EndOfWorkload:
      return EndOfWorkload{
          req_str(j, "clientId"),
          static_cast<std::uint32_t>(req_u64(j, "iterationsCompleted")),
          req_bool(j, "partial")};
    case MsgType::AssignConfigReq: {
      AssignConfigReq b;
      b.role = req_str(j, "role");
      b.term = req_u64(j, "term");
      b.voted_for = req_str(j, "votedFor");
      b.current_leader = req_str(j, "currentLeader");
      b.peers = req_str_list(j, "peers");
      b.election_timeout_ms = req_int(j, "electionTimeoutMs");
      b.election_timeout_min_ms = req_int(j, "electionTimeoutMinMs");
      b.election_timeout_max_ms = req_int(j, "electionTimeoutMaxMs");
      b.heartbeat_mode = req_str(j, "heartbeatMode");
      return b;
    }
    case MsgType::AssignConfigResp:
      return AssignConfigResp{req_bool(j, "ok")};
    case MsgType::StartReq:
      return StartReq{};
    case MsgType::StartResp:
      return StartResp{req_bool(j, "ok")};
    case MsgType::DumpReq:
      return DumpReq{};
    case MsgType::DumpResp: {
      DumpResp b;
      b.id = req_str(j, "id");
      b.role = req_str(j, "role");
      b.current_term = req_u64(j, "term");
      b.commit_index = req_u64(j, "commitIndex");
      b.last_applied = req_u64(j, "lastApplied");
      const json& log = require(j, "log");
      if (!log.is_array()) throw DecodeFailure{"log is not an array"};
      for (const auto& e : log) b.log.push_back(entry_from_json(e));
      const json& kv = require(j, "kvEntries");
      if (!kv.is_object()) throw DecodeFailure{"kvEntries is not an object"};
      for (auto it = kv.begin(); it != kv.end(); ++it) {
        if (!it.value().is_string()) throw DecodeFailure{"kv value not a string"};
        b.kv_entries[it.key()] = it.value().get<std::string>();
      }
      const json& uids = require(j, "appliedUids");
      if (!uids.is_object()) throw DecodeFailure{"appliedUids is not an object"};
      for (auto it = uids.begin(); it != uids.end(); ++it) {
        const json& v = it.value();
        b.applied_uids[it.key()] =
            AppliedUid{req_str(v, "result"), req_bool(v, "success")};
      }
      const json& commits = require(j, "commitTimes");
      if (!commits.is_array()) throw DecodeFailure{"commitTimes is not an array"};
      for (const auto& c : commits) {
        const json& at = require(c, "atMs");
        if (!at.is_number_integer()) throw DecodeFailure{"atMs not an integer"};
        b.commit_times_ms.emplace_back(req_u64(c, "index"),
                                       at.get<std::int64_t>());
      }
      return b;
    }
    case MsgType::WriteStatsReq:
      return WriteStatsReq{req_str(j, "path")};
    case MsgType::WriteStatsResp:
      return WriteStatsResp{req_bool(j, "ok")};
    case MsgType::ShutdownReq:
      return ShutdownReq{};
    case MsgType::ShutdownResp:
      return ShutdownResp{req_bool(j, "ok")};
  }
  throw DecodeFailure{"unknown message type"};
}

inline std::optional<MsgType> type_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(MsgType::ShutdownResp); ++i) {
    auto t = static_cast<MsgType>(i);
    if (name == to_string(t)) return t;
  }
  return std::nullopt;
}

}  // namespace detail

/// Serializes a message as a single-line JSON object plus trailing newline.
inline std::string encode(const Message& msg) {
  json j{{"type", to_string(msg.type())},
         {"msgId", msg.msg_id},
         {"sender", msg.sender},
         {"body", std::visit(detail::BodyToJson{}, msg.body)}};
  std::string out = j.dump();
  out.push_back('\n');
  return out;
}

/// Parses one frame. Never yields a partial message: any malformed input
/// reports a reason through `error` and returns nullopt.
inline std::optional<Message> decode(std::string_view frame,
                                     std::string* error = nullptr) {
  auto fail = [&](const std::string& why) -> std::optional<Message> {
    if (error) *error = why;
    return std::nullopt;
  };
  while (!frame.empty() && (frame.back() == '\n' || frame.back() == '\r'))
    frame.remove_suffix(1);
  if (frame.empty()) return fail("empty frame");
  json j = json::parse(frame, nullptr, false);
  if (j.is_discarded()) return fail("invalid JSON");
  if (!j.is_object()) return fail("frame is not a JSON object");
  try {
    std::string type_name = detail::req_str(j, "type");
    auto type = detail::type_from_name(type_name);
    if (!type) return fail("unknown type: " + type_name);
    Message msg;
    msg.msg_id = detail::req_str(j, "msgId");
    msg.sender = detail::req_str(j, "sender");
    msg.body = detail::body_from_json(*type, detail::require(j, "body"));
    return msg;
  } catch (const detail::DecodeFailure& f) {
    return fail(f.reason);
  } catch (const json::exception& e) {
    return fail(e.what());
  }
}

}  // namespace wire
}  // namespace raftdev

#endif  // RAFTDEV_WIRE_HPP_
