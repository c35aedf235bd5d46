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

// Benchmark manager CLI: orchestrates local server processes and client
// sessions through the latency/throughput/failure experiments and writes
// figure-ready CSV plus per-run JSON traces.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "raftdev/harness.hpp"

namespace {

std::string default_server_binary() {
  char buf[4096];
  ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "./raftd";
  buf[n] = '\0';
  return (std::filesystem::path(buf).parent_path() / "raftd").string();
}

int cmd_run(const raftdev::ExperimentConfig& config) {
  raftdev::ExperimentRunner runner(config);
  std::printf("experiment: servers=%d clients=%d iterations=%u scenario=%s runs=%d\n",
              config.servers, config.clients, config.iterations,
              raftdev::to_string(config.scenario), config.runs);
  auto reports = runner.run_experiment();
  double lat = 0, thr = 0;
  bool all_ok = true;
  for (const auto& r : reports) {
    std::printf(
        "run %d: latency=%.3f ms throughput=%.1f ops/s audit=%s%s%s\n",
        r.run_index, r.stats.latency_ms, r.stats.throughput_ops,
        r.audit_ok ? "ok" : ("FAILED (" + r.audit_detail + ")").c_str(),
        r.partial ? " PARTIAL" : "",
        r.unavailability_window_ms >= 0
            ? (" window=" + std::to_string(r.unavailability_window_ms) + "ms").c_str()
            : "");
    lat += r.stats.latency_ms;
    thr += r.stats.throughput_ops;
    if (!r.audit_ok || r.partial) all_ok = false;
    for (const auto& a : r.anomalies)
      std::printf("  anomaly: %s\n", a.c_str());
  }
  std::printf("average: clients=%d latency=%.3f ms throughput=%.1f ops/s\n",
              config.clients, lat / config.runs, thr / config.runs);
  std::printf("csv: %s/raft_%ds%s.csv\n", config.out_dir.c_str(), config.servers,
              raftdev::scenario_csv_suffix(config.scenario).c_str());
  return all_ok ? 0 : 2;
}

int cmd_client(const std::string& group, int port, int probe_window_ms,
               const std::string& servers_csv, const std::string& command,
               const std::vector<std::string>& params) {
  raftdev::ClientOptions opt;
  opt.client_id = "cli";
  opt.mcast_group = group;
  opt.mcast_port = static_cast<std::uint16_t>(port);
  opt.probe_window_ms = probe_window_ms;
  raftdev::ClientSession session(opt);
  if (servers_csv.empty()) {
    session.discover();
    std::printf("discovered %zu server(s)\n", session.known().size());
  } else {
    std::vector<std::string> addresses;
    std::stringstream ss(servers_csv);
    std::string addr;
    while (std::getline(ss, addr, ','))
      if (!addr.empty()) addresses.push_back(addr);
    session.seed(addresses, addresses.empty() ? "" : addresses[0]);
  }
  auto outcome = session.insert_command(command, params);
  std::printf("success=%s result=%s attempts=%d uid=%s\n",
              outcome.success ? "true" : "false", outcome.result.c_str(),
              outcome.attempts, outcome.uid.c_str());
  return outcome.success ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raftbench - replicated-service benchmark manager"};
  app.require_subcommand(1);

  raftdev::ExperimentConfig config;
  config.server_binary = default_server_binary();
  std::string scenario = "0E";
  std::string hosts_file;
  int mcast_port = 3702;

  auto* run = app.add_subcommand("run", "execute one experiment configuration");
  run->add_option("--servers", config.servers, "cluster size (1, 3 or 5)");
  run->add_option("--clients", config.clients, "client count (1, 5, 10 or 25)");
  run->add_option("--iterations", config.iterations,
                  "insertions per client (default 120)");
  run->add_option("--scenario", scenario, "0E, 1F, 1L, 2F or 1F1L")
      ->check(CLI::IsMember({"0E", "1F", "1L", "2F", "1F1L"}));
  run->add_option("--runs", config.runs, "repetitions to average (default 5)");
  run->add_option("--out", config.out_dir, "output directory");
  run->add_option("--hosts", hosts_file,
                  "file with one launcher prefix per server (e.g. 'ssh node1'; "
                  "blank lines spawn locally)");
  run->add_option("--heartbeat-mode", config.heartbeat_mode,
                  "safe or paper (cadence = election timeout)")
      ->check(CLI::IsMember({"safe", "paper"}));
  run->add_option("--server-bin", config.server_binary, "path to raftd");
  run->add_option("--mcast-group", config.mcast_group, "discovery group");
  run->add_option("--mcast-port", mcast_port, "discovery port");
  run->add_option("--timeout-min", config.election_timeout_min_ms,
                  "election timeout lower bound, ms");
  run->add_option("--timeout-max", config.election_timeout_max_ms,
                  "election timeout upper bound, ms");
  run->add_option("--keyspace", config.keyspace, "distinct keys per workload");
  run->add_option("--seed", config.rng_seed, "manager rng seed");

  std::string client_group = "239.255.255.250";
  int client_port = 3702;
  int probe_window_ms = 500;
  std::string servers_csv, command;
  std::vector<std::string> params;
  auto* client = app.add_subcommand(
      "client", "issue one command (PUT key value / DEL key) to a cluster");
  client->add_option("--mcast-group", client_group, "discovery group");
  client->add_option("--mcast-port", client_port, "discovery port");
  client->add_option("--probe-window-ms", probe_window_ms,
                     "probe collection window");
  client->add_option("--servers", servers_csv,
                     "comma-separated server addresses (skips discovery)");
  client->add_option("command", command, "PUT or DEL")->required();
  client->add_option("params", params, "command parameters");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      config.scenario = *raftdev::scenario_from_string(scenario);
      config.mcast_port = static_cast<std::uint16_t>(mcast_port);
      if (!hosts_file.empty()) {
        std::ifstream in(hosts_file);
        if (!in) throw std::runtime_error("cannot read hosts file " + hosts_file);
        std::string line;
        while (std::getline(in, line)) config.host_prefixes.push_back(line);
      }
      return cmd_run(config);
    }
    return cmd_client(client_group, client_port, probe_window_ms, servers_csv,
                      command, params);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "raftbench: %s\n", e.what());
    return 1;
  }
}
