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

#ifndef RAFTDEV_PEER_TABLE_HPP_
#define RAFTDEV_PEER_TABLE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "raftdev/message.hpp"

namespace raftdev {

inline constexpr const char* kRaftDeviceType = "Raft_Device";

struct PeerInfo {
  std::string service_address;
  std::string device_type;
  std::int64_t last_seen_ms = 0;
  bool operator==(const PeerInfo&) const = default;
};

/// Discovery-maintained membership view, keyed by device endpoint id. Only
/// devices of type "Raft_Device" are admitted; peers leave on Bye only, never
/// by timestamp expiry (lastSeen is informational).
class PeerTable {
 public:
  const std::map<std::string, PeerInfo>& peers() const { return peers_; }

  bool contains(const std::string& endpoint_id) const {
    return peers_.contains(endpoint_id);
  }

  std::size_t size() const { return peers_.size(); }
  bool empty() const { return peers_.empty(); }

  std::vector<std::string> addresses() const {
    std::vector<std::string> out;
    out.reserve(peers_.size());
    for (const auto& [id, info] : peers_) out.push_back(info.service_address);
    return out;
  }

  void upsert(const std::string& endpoint_id, const std::string& address,
              const std::string& device_type, std::int64_t now_ms) {
    if (device_type != kRaftDeviceType) return;
    peers_[endpoint_id] = PeerInfo{address, device_type, now_ms};
  }

  void remove(const std::string& endpoint_id) { peers_.erase(endpoint_id); }

  bool operator==(const PeerTable&) const = default;

 private:
  std::map<std::string, PeerInfo> peers_;
};

/// Folds one discovery announcement into the table: Hello/ProbeMatch upsert
/// (refreshing lastSeen), Bye removes, everything else is ignored.
inline void handle_discovery_event(PeerTable& table, const Message& event,
                                   std::int64_t now_ms) {
  if (event.is<Hello>()) {
    const auto& h = event.as<Hello>();
    table.upsert(h.endpoint_id, h.service_address, h.device_type, now_ms);
  } else if (event.is<ProbeMatch>()) {
    const auto& m = event.as<ProbeMatch>();
    table.upsert(m.endpoint_id, m.service_address, m.device_type, now_ms);
  } else if (event.is<Bye>()) {
    table.remove(event.as<Bye>().endpoint_id);
  }
}

}  // namespace raftdev

#endif  // RAFTDEV_PEER_TABLE_HPP_
