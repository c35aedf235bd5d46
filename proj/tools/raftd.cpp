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

// Replicated key-value device server. Runs either managed (a benchmark
// manager assigns role, peers and timeout over the control plane) or
// standalone against static or discovered peers.

#include <csignal>
#include <cstdio>
#include <thread>

#include <CLI11.hpp>

#include "raftdev/server.hpp"

namespace {
volatile std::sig_atomic_t g_signal = 0;
void on_signal(int sig) { g_signal = sig; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raftd - replicated key-value device server"};

  raftdev::ServerOptions options;
  options.rng_seed = std::random_device{}();
  std::string peers_csv;
  std::string heartbeat_mode = "safe";
  int mcast_port = 3702;

  app.add_option("--listen", options.listen_address,
                 "bind address, host:port (port 0 picks one)");
  app.add_option("--endpoint-id", options.endpoint_id,
                 "stable device endpoint id (defaults to the bound address)");
  app.add_flag("--managed", options.managed,
               "wait for AssignConfig/Start from a manager");
  app.add_option("--peers", peers_csv,
                 "comma-separated peer service addresses (standalone mode)");
  app.add_flag("--dynamic", options.dynamic_membership,
               "experimental: membership follows discovery events");
  app.add_option("--mcast-group", options.mcast_group, "discovery group");
  app.add_option("--mcast-port", mcast_port, "discovery port");
  app.add_flag("!--no-announce", options.announce,
               "do not join discovery or announce");
  app.add_option("--heartbeat-mode", heartbeat_mode,
                 "safe (fixed 50 ms cadence) or paper (cadence = own election "
                 "timeout)")
      ->check(CLI::IsMember({"safe", "paper"}));
  app.add_option("--heartbeat-period-ms", options.heartbeat_period_ms,
                 "leader send period in safe mode");
  app.add_option("--election-timeout-min", options.election_timeout_min_ms,
                 "election timeout lower bound, ms");
  app.add_option("--election-timeout-max", options.election_timeout_max_ms,
                 "election timeout upper bound, ms");
  app.add_option("--journal", options.journal_path,
                 "append-only journal of applied entries");
  app.add_option("--seed", options.rng_seed, "rng seed (timeout draws)");

  CLI11_PARSE(app, argc, argv);

  options.mcast_port = static_cast<std::uint16_t>(mcast_port);
  options.heartbeat_uses_election_timeout = heartbeat_mode == "paper";
  if (!peers_csv.empty()) {
    std::stringstream ss(peers_csv);
    std::string peer;
    while (std::getline(ss, peer, ','))
      if (!peer.empty()) options.static_peers.push_back(peer);
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    raftdev::ServerRuntime runtime(options);
    std::printf("LISTEN %s\n", runtime.address().c_str());
    std::printf("ENDPOINT %s\n", runtime.endpoint_id().c_str());
    std::fflush(stdout);
    while (g_signal == 0 && !runtime.shutdown_requested())
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    runtime.stop();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "raftd: %s\n", e.what());
    return 1;
  }
  return 0;
}
