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

#ifndef RAFTDEV_STATE_MACHINE_HPP_
#define RAFTDEV_STATE_MACHINE_HPP_

#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "raftdev/types.hpp"

namespace raftdev {

/// Behavioral contract for the replicated state machine: insertion is
/// deterministic, so equal entry sequences produce equal states and equal
/// (success, result) outputs on every replica.
class StateMachine {
 public:
  virtual ~StateMachine() = default;

  /// Applies one committed entry. Returns (success, result); a false success
  /// must leave the observable state untouched.
  virtual std::pair<bool, std::string> insert(const LogEntry& entry) = 0;

  /// Releases resources; further inserts are rejected. Terminating twice is
  /// a caller error.
  virtual void terminate() = 0;
};

namespace journal_detail {

// '%', '|' and newlines are reserved by the record format.
inline std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  static const char* hex = "0123456789ABCDEF";
  for (unsigned char c : s) {
    if (c == '%' || c == '|' || c == ',' || c == '\n' || c == '\r') {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

}  // namespace journal_detail

/// Append-only journal: one line per applied entry, fields
/// index|term|uid|command|parameters (parameters comma-joined, reserved
/// characters percent-escaped).
class Journal {
 public:
  explicit Journal(const std::string& path)
      : out_(path, std::ios::app | std::ios::out) {
    if (!out_) throw std::runtime_error("cannot open journal: " + path);
  }

  void record(const LogEntry& entry) {
    using journal_detail::escape;
    out_ << entry.index << '|' << entry.term << '|' << escape(entry.uid) << '|'
         << escape(entry.command) << '|';
    for (size_t i = 0; i < entry.parameters.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(entry.parameters[i]);
    }
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

/// Key-value machine used by all experiments. Commands:
///   PUT <key> <value>  -> "OK"
///   DEL <key>          -> "OK", or (false, "NOT_FOUND") when absent
/// Unknown commands fail with "BAD_COMMAND", wrong parameter counts with
/// "BAD_ARITY". Every applied uid's outcome is recorded and never changes.
class KvStateMachine : public StateMachine {
 public:
  struct AppliedOutcome {
    std::string result;
    bool success = false;
    bool operator==(const AppliedOutcome&) const = default;
  };

  KvStateMachine() = default;

  explicit KvStateMachine(const std::string& journal_path)
      : journal_(std::make_unique<Journal>(journal_path)) {}

  std::pair<bool, std::string> insert(const LogEntry& entry) override {
    if (terminated_)
      throw std::logic_error("insert on a terminated state machine");
    auto outcome = dispatch(entry);
    applied_uids_.emplace(entry.uid, AppliedOutcome{outcome.second, outcome.first});
    if (journal_) journal_->record(entry);
    return outcome;
  }

  void terminate() override {
    if (terminated_) throw std::logic_error("state machine terminated twice");
    terminated_ = true;
    journal_.reset();
  }

  bool terminated() const { return terminated_; }

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::map<std::string, AppliedOutcome>& applied_uids() const {
    return applied_uids_;
  }

  bool operator==(const KvStateMachine& other) const {
    return entries_ == other.entries_ && applied_uids_ == other.applied_uids_;
  }

 private:
  std::pair<bool, std::string> dispatch(const LogEntry& entry) {
    if (entry.command == "PUT") {
      if (entry.parameters.size() != 2) return {false, "BAD_ARITY"};
      entries_[entry.parameters[0]] = entry.parameters[1];
      return {true, "OK"};
    }
    if (entry.command == "DEL") {
      if (entry.parameters.size() != 1) return {false, "BAD_ARITY"};
      if (entries_.erase(entry.parameters[0]) == 0) return {false, "NOT_FOUND"};
      return {true, "OK"};
    }
    return {false, "BAD_COMMAND"};
  }

  std::map<std::string, std::string> entries_;
  std::map<std::string, AppliedOutcome> applied_uids_;
  bool terminated_ = false;
  std::unique_ptr<Journal> journal_;
};

}  // namespace raftdev

#endif  // RAFTDEV_STATE_MACHINE_HPP_
