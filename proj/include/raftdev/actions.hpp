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

#ifndef RAFTDEV_ACTIONS_HPP_
#define RAFTDEV_ACTIONS_HPP_

#include <string>
#include <variant>
#include <vector>

#include "raftdev/message.hpp"
#include "raftdev/types.hpp"

namespace raftdev {

// The core performs no I/O; every event handler returns an ordered action
// list that the surrounding runtime (real transport or simulator) interprets.

enum class TimerKind { Election, Heartbeat };

inline const char* to_string(TimerKind k) {
  return k == TimerKind::Election ? "election" : "heartbeat";
}

/// Unicast a request to one peer. AppendEntries fan-out uses one Send per
/// peer because each carries a peer-specific prefix.
struct SendAction {
  ServerId target;
  MessageBody request;
};

/// Same request to every known peer (RequestVote).
struct BroadcastAction {
  MessageBody request;
};

struct ArmTimerAction {
  TimerKind timer;
  int duration_ms;
};

struct CancelTimerAction {
  TimerKind timer;
};

/// commit_index moved past last_applied; the runtime must call
/// apply_committed with its state machine.
struct ApplyCommittedAction {};

/// Entry `index` committed; release the client waiting on its latch, if any.
struct ReplyToClientAction {
  LogIndex index;
  std::string uid;
};

struct BecomeFollowerAction {};
struct BecomeCandidateAction {};
struct BecomeLeaderAction {};

using Action =
    std::variant<SendAction, BroadcastAction, ArmTimerAction, CancelTimerAction,
                 ApplyCommittedAction, ReplyToClientAction, BecomeFollowerAction,
                 BecomeCandidateAction, BecomeLeaderAction>;

using Actions = std::vector<Action>;

}  // namespace raftdev

#endif  // RAFTDEV_ACTIONS_HPP_
