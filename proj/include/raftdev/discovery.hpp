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

#ifndef RAFTDEV_DISCOVERY_HPP_
#define RAFTDEV_DISCOVERY_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "raftdev/net.hpp"
#include "raftdev/peer_table.hpp"
#include "raftdev/uid.hpp"
#include "raftdev/wire.hpp"

// Multicast membership layer: devices announce themselves with Hello/Bye and
// answer Probe solicitations with a unicast ProbeMatch, mirroring plug-and-play
// discovery semantics. Default group/port are the ones assigned to that
// protocol family (239.255.255.250:3702), overridable via flags.

namespace raftdev {

struct DiscoveryConfig {
  std::string group = "239.255.255.250";
  std::uint16_t port = 3702;
  std::string endpoint_id;       // stable device identity (urn-ish string)
  std::string device_type = kRaftDeviceType;
  std::string service_address;   // where the device's service listens
};

inline std::int64_t steady_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

/// Joins the discovery group, announces this device, answers probes for its
/// type and feeds every admitted announcement to the owner's callback.
class DiscoveryAgent {
 public:
  using EventCallback = std::function<void(const Message&, std::int64_t now_ms)>;

  DiscoveryAgent(DiscoveryConfig config, EventCallback on_event)
      : config_(std::move(config)), on_event_(std::move(on_event)) {
    std::string error;
    rx_ = net::mcast_join(config_.group, config_.port, &error);
    if (!rx_.valid())
      throw std::runtime_error("multicast join failed: " + error);
    tx_ = net::mcast_sender();
    listener_ = std::thread([this] { listen_loop(); });
  }

  ~DiscoveryAgent() {
    stopping_ = true;  // listener polls with a 100 ms window
    if (listener_.joinable()) listener_.join();
  }

  DiscoveryAgent(const DiscoveryAgent&) = delete;
  DiscoveryAgent& operator=(const DiscoveryAgent&) = delete;

  const DiscoveryConfig& config() const { return config_; }
  std::uint64_t malformed_datagrams() const { return malformed_.load(); }

  void announce_hello() {
    send(Message{next_msg_id(), config_.endpoint_id,
                 Hello{config_.endpoint_id, config_.device_type,
                       config_.service_address}});
  }

  void announce_bye() {
    send(Message{next_msg_id(), config_.endpoint_id, Bye{config_.endpoint_id}});
  }

 private:
  void send(const Message& msg) {
    std::string frame = wire::encode(msg);
    std::lock_guard lock(tx_mu_);
    if (!net::udp_send_to(tx_.get(), config_.group, config_.port, frame))
      throw std::runtime_error("discovery datagram send failed");
  }

  void listen_loop() {
    while (!stopping_) {
      auto datagram = net::udp_recv(rx_.get(), 100);
      if (stopping_) return;
      if (!datagram) continue;
      auto& [payload, from] = *datagram;
      std::string error;
      auto msg = wire::decode(payload, &error);
      if (!msg) {
        malformed_.fetch_add(1);
        continue;
      }
      if (msg->is<Probe>()) {
        const auto& probe = msg->as<Probe>();
        if (probe.device_type == config_.device_type) reply_match(*msg, from);
        continue;
      }
      // Own announcements loop back; they are not peers.
      if (msg->is<Hello>() && msg->as<Hello>().endpoint_id == config_.endpoint_id)
        continue;
      if (msg->is<Bye>() && msg->as<Bye>().endpoint_id == config_.endpoint_id)
        continue;
      if (msg->is<Hello>() || msg->is<Bye>() || msg->is<ProbeMatch>())
        on_event_(*msg, steady_now_ms());
    }
  }

  void reply_match(const Message& probe, const sockaddr_in& from) {
    Message match{probe.msg_id, config_.endpoint_id,
                  ProbeMatch{config_.endpoint_id, config_.device_type,
                             config_.service_address}};
    std::string frame = wire::encode(match);
    char host[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &from.sin_addr, host, sizeof(host));
    std::lock_guard lock(tx_mu_);
    net::udp_send_to(tx_.get(), host, ntohs(from.sin_port), frame);
  }

  DiscoveryConfig config_;
  EventCallback on_event_;
  net::Fd rx_;
  net::Fd tx_;
  std::mutex tx_mu_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> malformed_{0};
  std::thread listener_;
};

/// One probe round: solicits devices of `device_type` and collects unicast
/// ProbeMatch replies for `window_ms`, deduplicated by endpoint id.
inline std::vector<ProbeMatch> probe(const std::string& group,
                                     std::uint16_t port,
                                     const std::string& device_type,
                                     int window_ms = 500) {
  net::Fd sock = net::mcast_sender();
  Message msg{next_msg_id(), "probe", Probe{device_type}};
  if (!net::udp_send_to(sock.get(), group, port, wire::encode(msg)))
    throw std::runtime_error("probe send failed");
  std::vector<ProbeMatch> matches;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(window_ms);
  while (true) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - std::chrono::steady_clock::now())
                         .count();
    if (remaining <= 0) break;
    auto datagram = net::udp_recv(sock.get(), static_cast<int>(remaining));
    if (!datagram) continue;
    auto decoded = wire::decode(datagram->first);
    if (!decoded || !decoded->is<ProbeMatch>()) continue;
    const auto& match = decoded->as<ProbeMatch>();
    if (match.device_type != device_type) continue;
    bool seen = false;
    for (const auto& m : matches)
      if (m.endpoint_id == match.endpoint_id) seen = true;
    if (!seen) matches.push_back(match);
  }
  return matches;
}

/// Passive membership collector: listens for announcements (and optionally
/// sends one probe round) and maintains a PeerTable.
class PeerTracker {
 public:
  explicit PeerTracker(DiscoveryConfig config)
      : agent_(std::move(config), [this](const Message& m, std::int64_t now) {
          std::lock_guard lock(mu_);
          handle_discovery_event(table_, m, now);
          on_change_.notify_all();
        }) {}

  PeerTable snapshot() const {
    std::lock_guard lock(mu_);
    return table_;
  }

  void merge_matches(const std::vector<ProbeMatch>& matches) {
    std::lock_guard lock(mu_);
    for (const auto& m : matches) {
      Message msg{"", m.endpoint_id, m};
      handle_discovery_event(table_, msg, steady_now_ms());
    }
    on_change_.notify_all();
  }

  /// Blocks until the table holds at least `count` peers satisfying `accept`
  /// (pass nullptr for any), or the deadline passes.
  bool await_peers(
      std::size_t count, int timeout_ms,
      const std::function<bool(const std::string&, const PeerInfo&)>& accept =
          {}) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout_ms);
    std::unique_lock lock(mu_);
    return on_change_.wait_until(lock, deadline, [&] {
      std::size_t n = 0;
      for (const auto& [id, info] : table_.peers())
        if (!accept || accept(id, info)) ++n;
      return n >= count;
    });
  }

  DiscoveryAgent& agent() { return agent_; }

 private:
  mutable std::mutex mu_;
  std::condition_variable on_change_;
  PeerTable table_;
  DiscoveryAgent agent_;
};

}  // namespace raftdev

#endif  // RAFTDEV_DISCOVERY_HPP_
