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

#ifndef RAFTDEV_CLIENT_HPP_
#define RAFTDEV_CLIENT_HPP_

#include <algorithm>
#include <chrono>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "raftdev/discovery.hpp"
#include "raftdev/transport.hpp"
#include "raftdev/uid.hpp"

namespace raftdev {

struct NoServersFound : std::runtime_error {
  NoServersFound() : std::runtime_error("no servers discovered") {}
};

struct RetriesExhausted : std::runtime_error {
  explicit RetriesExhausted(const std::string& uid)
      : std::runtime_error("retries exhausted for uid " + uid) {}
};

struct ClientOptions {
  std::string client_id = "client";
  std::string mcast_group = "239.255.255.250";
  std::uint16_t mcast_port = 3702;
  int probe_window_ms = 500;
  int hello_listen_ms = 200;
  int request_timeout_ms = 1000;
  int max_backoff_ms = 1000;
  int max_attempts = 10;
  std::uint64_t rng_seed = std::random_device{}();
};

struct InsertOutcome {
  bool success = false;
  std::string result;
  std::string uid;
  int attempts = 0;
};

struct WorkloadReport {
  std::vector<double> latencies_ms;  // one sample per completed iteration
  std::uint32_t iterations_completed = 0;
  bool partial = false;
};

/// One client session: discovers devices, targets the presumed leader,
/// follows redirects and reconnects with randomized backoff, reusing one uid
/// per logical command so retries stay idempotent. Single-threaded; run one
/// session per thread.
class ClientSession {
 public:
  explicit ClientSession(ClientOptions options)
      : options_(std::move(options)),
        transport_(options_.client_id),
        uids_(options_.rng_seed),
        rng_(options_.rng_seed ^ 0x5bd1e995) {}

  /// Populates the peer table from Hello announcements plus one probe round;
  /// the first detected device becomes the target.
  void discover() {
    DiscoveryConfig dc;
    dc.group = options_.mcast_group;
    dc.port = options_.mcast_port;
    dc.endpoint_id = "urn:raftdev:client:" + options_.client_id;
    dc.device_type = "Raft_Client";  // listeners only; never answers probes
    dc.service_address = "";
    PeerTracker tracker(dc);
    tracker.await_peers(1, options_.hello_listen_ms);
    auto matches = probe(options_.mcast_group, options_.mcast_port,
                         kRaftDeviceType, options_.probe_window_ms);
    tracker.merge_matches(matches);
    known_ = tracker.snapshot();
    if (known_.empty()) throw NoServersFound();
    if (current_target_.empty())
      current_target_ = known_.peers().begin()->second.service_address;
  }

  /// Benchmark path: the manager hands the membership and the leader over
  /// directly instead of the session discovering them.
  void seed(const std::vector<std::string>& addresses,
            const std::string& leader) {
    for (size_t i = 0; i < addresses.size(); ++i)
      known_.upsert("seeded:" + addresses[i], addresses[i], kRaftDeviceType, 0);
    current_target_ = leader.empty() && !addresses.empty() ? addresses[0]
                                                           : leader;
  }

  const PeerTable& known() const { return known_; }
  const std::string& current_target() const { return current_target_; }
  const std::vector<std::string>& issued_uids() const { return issued_uids_; }
  int reconnects() const { return reconnects_; }

  /// One idempotent command: a fresh uid is minted once, then reused across
  /// every redirect and reconnect until some leader answers.
  InsertOutcome insert_command(const std::string& command,
                               const std::vector<std::string>& parameters) {
    std::string uid = uids_.next();
    issued_uids_.push_back(uid);
    std::string target = current_target_;
    InsertOutcome outcome;
    outcome.uid = uid;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
      outcome.attempts = attempt + 1;
      CallResult r = transport_.call(
          target, InsertCommandReq{uid, command, parameters},
          options_.request_timeout_ms);
      if (r.ok() && r.response->is<InsertCommandResp>()) {
        const auto& resp = r.response->as<InsertCommandResp>();
        if (resp.success || !resp.result.empty()) {
          current_target_ = target;
          outcome.success = resp.success;
          outcome.result = resp.result;
          return outcome;
        }
        if (!resp.leader_address.empty() && resp.leader_address != target) {
          target = resp.leader_address;  // reissue to the leader, same uid
          continue;
        }
        // Follower without a known leader: treat like a connection loss.
      } else {
        transport_.forget(target);
        ++reconnects_;
      }
      backoff();
      target = different_server(target);
    }
    throw RetriesExhausted(uid);
  }

  /// Back-to-back PUT iterations against generated keys, reporting one
  /// wall-clock latency sample per iteration and notifying the manager when
  /// the workload ends.
  WorkloadReport run_workload(std::uint32_t iterations, int keyspace,
                              const std::string& manager_address = "") {
    WorkloadReport report;
    report.latencies_ms.reserve(iterations);
    for (std::uint32_t i = 0; i < iterations; ++i) {
      std::string key =
          "key-" + std::to_string(keyspace > 0 ? rng_() % keyspace : i);
      std::string value = options_.client_id + "-" + std::to_string(i);
      auto start = std::chrono::steady_clock::now();
      try {
        insert_command("PUT", {key, value});
      } catch (const RetriesExhausted&) {
        report.partial = true;
        break;
      }
      auto elapsed = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      report.latencies_ms.push_back(elapsed);
      report.iterations_completed = i + 1;
    }
    if (!manager_address.empty())
      transport_.notify(manager_address,
                        EndOfWorkload{options_.client_id,
                                      report.iterations_completed,
                                      report.partial});
    return report;
  }

 private:
  void backoff() {
    // Mirrors the reconnect behavior of the comparison system's client: a
    // random wait capped at one second before trying another server.
    int wait = 1 + static_cast<int>(
                       rng_() % static_cast<std::uint64_t>(options_.max_backoff_ms));
    std::this_thread::sleep_for(std::chrono::milliseconds(wait));
  }

  std::string different_server(const std::string& avoid) {
    std::vector<std::string> addresses = known_.addresses();
    std::erase(addresses, avoid);
    if (addresses.empty()) return avoid;
    return addresses[rng_() % addresses.size()];
  }

  ClientOptions options_;
  Transport transport_;
  UidGenerator uids_;
  std::mt19937_64 rng_;
  PeerTable known_;
  std::string current_target_;
  std::vector<std::string> issued_uids_;
  int reconnects_ = 0;
};

}  // namespace raftdev

#endif  // RAFTDEV_CLIENT_HPP_
