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

#ifndef RAFTDEV_HARNESS_HPP_
#define RAFTDEV_HARNESS_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "raftdev/client.hpp"
#include "raftdev/discovery.hpp"
#include "raftdev/process.hpp"
#include "raftdev/transport.hpp"

// Benchmark manager: orchestrates local server processes and in-process
// client sessions through the experiment sequence (launch, discover, assign,
// start, workload, failure injection, stats collection, teardown), audits
// exactly-once delivery afterwards and emits figure-ready CSV.

namespace raftdev {

enum class Scenario { E0, F1, L1, F2, F1L1 };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::E0: return "0E";
    case Scenario::F1: return "1F";
    case Scenario::L1: return "1L";
    case Scenario::F2: return "2F";
    case Scenario::F1L1: return "1F1L";
  }
  return "?";
}

inline std::optional<Scenario> scenario_from_string(const std::string& s) {
  if (s == "0E") return Scenario::E0;
  if (s == "1F") return Scenario::F1;
  if (s == "1L") return Scenario::L1;
  if (s == "2F") return Scenario::F2;
  if (s == "1F1L") return Scenario::F1L1;
  return std::nullopt;
}

/// File suffix convention for figure data series.
inline std::string scenario_csv_suffix(Scenario s) {
  switch (s) {
    case Scenario::E0: return "";
    case Scenario::F1: return "_1replica";
    case Scenario::L1: return "_1leader";
    case Scenario::F2: return "_2replicas";
    case Scenario::F1L1: return "_1replica1leader";
  }
  return "";
}

struct ExperimentConfig {
  int servers = 3;             // 1, 3 or 5
  int clients = 1;             // 1, 5, 10 or 25
  std::uint32_t iterations = 120;
  Scenario scenario = Scenario::E0;
  int election_timeout_min_ms = 150;
  int election_timeout_max_ms = 300;
  int runs = 5;
  std::string heartbeat_mode = "safe";  // or "paper"
  std::string server_binary;
  std::string out_dir = "bench-out";
  std::string mcast_group = "239.255.255.250";
  std::uint16_t mcast_port = 3702;
  int keyspace = 64;
  int discovery_timeout_ms = 15000;
  int workload_deadline_ms = 180000;
  // One launcher prefix per server for multi-host runs (e.g. "ssh node1");
  // empty entries spawn locally. Must match `servers` when non-empty.
  std::vector<std::string> host_prefixes;
  std::uint64_t rng_seed = std::random_device{}();

  void validate() const {
    if (servers != 1 && servers != 3 && servers != 5)
      throw std::invalid_argument("servers must be 1, 3 or 5");
    if (clients != 1 && clients != 5 && clients != 10 && clients != 25)
      throw std::invalid_argument("clients must be 1, 5, 10 or 25");
    if (scenario == Scenario::L1 && servers < 3)
      throw std::invalid_argument("1L requires at least 3 servers");
    if ((scenario == Scenario::F2 || scenario == Scenario::F1L1) && servers != 5)
      throw std::invalid_argument("2F and 1F1L require 5 servers");
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (!host_prefixes.empty() &&
        host_prefixes.size() != static_cast<size_t>(servers))
      throw std::invalid_argument("hosts file must list one entry per server");
  }
};

/// One figure row: client count, mean latency over the retained samples,
/// operations per second over the whole workload.
struct StatsRecord {
  int clients = 0;
  double latency_ms = 0.0;
  double throughput_ops = 0.0;
};

/// Latency pools iterations 11..(n-10) of each client; the first and last
/// ten are discarded. Throughput counts every iteration over the wall time
/// from workload start to the last end-of-workload notification.
inline StatsRecord compute_stats(
    int clients, std::uint32_t iterations,
    const std::vector<std::vector<double>>& samples_per_client,
    double wall_seconds) {
  if (iterations < 21)
    throw std::invalid_argument(
        "latency undefined below 21 iterations (10 head + 10 tail discarded)");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& samples : samples_per_client) {
    if (samples.size() < 21) continue;  // partial client, flagged upstream
    for (std::size_t i = 10; i + 10 < samples.size(); ++i) {
      sum += samples[i];
      ++n;
    }
  }
  StatsRecord rec;
  rec.clients = clients;
  rec.latency_ms = n > 0 ? sum / static_cast<double>(n) : 0.0;
  rec.throughput_ops =
      wall_seconds > 0.0
          ? static_cast<double>(clients) * static_cast<double>(iterations) /
                wall_seconds
          : 0.0;
  return rec;
}

/// Headerless rows "clients latency_ms throughput_ops", ascending by client
/// count, one row per client count (the plotting table layout).
inline void emit_csv(std::vector<StatsRecord> records, const std::string& path) {
  std::sort(records.begin(), records.end(),
            [](const StatsRecord& a, const StatsRecord& b) {
              return a.clients < b.clients;
            });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) {
    std::ostringstream line;
    line << r.clients << ' ' << r.latency_ms << ' ' << r.throughput_ops;
    out << line.str() << '\n';
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

/// Reads rows previously written by emit_csv (used to upsert one client-count
/// row into an existing series).
inline std::vector<StatsRecord> read_csv(const std::string& path) {
  std::vector<StatsRecord> records;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    StatsRecord r;
    if (row >> r.clients >> r.latency_ms >> r.throughput_ops)
      records.push_back(r);
  }
  return records;
}

struct RunReport;

struct KillRecord {
  std::string target;  // endpoint id
  std::string role;    // designated role at kill time
  std::int64_t configured_offset_ms = 0;
  std::int64_t actual_offset_ms = 0;
  std::int64_t at_steady_ms = 0;
};

struct RunReport {
  int run_index = 0;
  StatsRecord stats;
  bool partial = false;
  bool audit_ok = false;
  std::string audit_detail;
  std::size_t issued_uids = 0;
  std::size_t committed_entries = 0;
  std::vector<KillRecord> kills;
  // 1L-family scenarios: last commit before the leader kill to the first
  // commit after it, measured on the shared steady clock.
  std::int64_t unavailability_window_ms = -1;
  double wall_seconds = 0.0;
  std::vector<std::string> anomalies;
  std::string survivors_leader;
};

/// Drives one experiment configuration through `runs` repetitions.
class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentConfig config)
      : config_(std::move(config)) {
    config_.validate();
    if (config_.server_binary.empty())
      throw std::invalid_argument("server binary path is required");
    namespace fs = std::filesystem;
    fs::create_directories(config_.out_dir);
    fs::create_directories(config_.out_dir + "/logs");
    fs::create_directories(config_.out_dir + "/stats");
    fs::create_directories(config_.out_dir + "/trace");
  }

  const ExperimentConfig& config() const { return config_; }

  /// Runs every repetition, writes per-run traces and the averaged CSV row,
  /// and returns one report per run.
  std::vector<RunReport> run_experiment() {
    std::vector<RunReport> reports;
    for (int run = 0; run < config_.runs; ++run) {
      reports.push_back(run_once(run));
      write_trace(reports.back());
    }
    StatsRecord avg;
    avg.clients = config_.clients;
    for (const auto& r : reports) {
      avg.latency_ms += r.stats.latency_ms;
      avg.throughput_ops += r.stats.throughput_ops;
    }
    avg.latency_ms /= config_.runs;
    avg.throughput_ops /= config_.runs;
    upsert_csv_row(avg);
    return reports;
  }

  RunReport run_once(int run_index);

 private:
  struct ManagedServer {
    std::string endpoint_id;
    std::string address;
    ChildProcess process;
    bool killed = false;
    std::string designated_role;
  };

  void upsert_csv_row(const StatsRecord& row) {
    std::string path = config_.out_dir + "/raft_" +
                       std::to_string(config_.servers) + "s" +
                       scenario_csv_suffix(config_.scenario) + ".csv";
    auto records = read_csv(path);
    std::erase_if(records,
                  [&](const StatsRecord& r) { return r.clients == row.clients; });
    records.push_back(row);
    emit_csv(records, path);
  }

  void write_trace(const RunReport& report) {
    nlohmann::json kills = nlohmann::json::array();
    for (const auto& k : report.kills)
      kills.push_back({{"target", k.target},
                       {"role", k.role},
                       {"configuredOffsetMs", k.configured_offset_ms},
                       {"actualOffsetMs", k.actual_offset_ms}});
    nlohmann::json j{{"run", report.run_index},
                     {"servers", config_.servers},
                     {"clients", config_.clients},
                     {"iterations", config_.iterations},
                     {"scenario", to_string(config_.scenario)},
                     {"partial", report.partial},
                     {"auditOk", report.audit_ok},
                     {"auditDetail", report.audit_detail},
                     {"issuedUids", report.issued_uids},
                     {"committedEntries", report.committed_entries},
                     {"kills", std::move(kills)},
                     {"unavailabilityWindowMs", report.unavailability_window_ms},
                     {"wallSeconds", report.wall_seconds},
                     {"latencyMs", report.stats.latency_ms},
                     {"throughputOps", report.stats.throughput_ops},
                     {"anomalies", report.anomalies}};
    std::ofstream out(config_.out_dir + "/trace/run" +
                      std::to_string(report.run_index) + "_" +
                      std::to_string(config_.servers) + "s" +
                      std::to_string(config_.clients) + "c" +
                      to_string(config_.scenario) + ".json");
    out << j.dump(2) << "\n";
  }

  ExperimentConfig config_;
};

inline void audit_run(RunReport& report,
                      const std::vector<std::set<std::string>>& issued_per_client,
                      const std::map<int, DumpResp>& dumps);

inline RunReport ExperimentRunner::run_once(int run_index) {
  namespace fs = std::filesystem;
  RunReport report;
  report.run_index = run_index;
  std::mt19937_64 rng(config_.rng_seed + static_cast<std::uint64_t>(run_index));

  std::string run_token = "run" + std::to_string(run_index) + "-" +
                          std::to_string(::getpid()) + "-" +
                          std::to_string(rng() % 100000);

  // Manager endpoint: collects EndOfWorkload notifications.
  std::mutex eow_mu;
  std::map<std::string, std::int64_t> eow_times;
  std::condition_variable eow_cv;
  MessageServer manager_endpoint(
      "127.0.0.1:0", [&](const Message& m) -> std::optional<Message> {
        if (m.is<EndOfWorkload>()) {
          std::lock_guard lock(eow_mu);
          eow_times[m.as<EndOfWorkload>().client_id] = steady_now_ms();
          eow_cv.notify_all();
        }
        return std::nullopt;
      });

  // Discovery watch, filtered to this run's endpoint ids.
  std::set<std::string> expected_ids;
  for (int i = 0; i < config_.servers; ++i)
    expected_ids.insert("urn:raftdev:" + run_token + ":s" + std::to_string(i));
  DiscoveryConfig watch;
  watch.group = config_.mcast_group;
  watch.port = config_.mcast_port;
  watch.endpoint_id = "urn:raftdev:" + run_token + ":manager";
  watch.device_type = "Raft_Manager";
  PeerTracker tracker(watch);

  // Step 1-2: launch the servers, each in its own process.
  std::vector<ManagedServer> servers(config_.servers);
  for (int i = 0; i < config_.servers; ++i) {
    servers[i].endpoint_id =
        "urn:raftdev:" + run_token + ":s" + std::to_string(i);
    std::vector<std::string> argv;
    std::string prefix =
        config_.host_prefixes.empty() ? "" : config_.host_prefixes[i];
    std::vector<std::string> raftd_args = {
        config_.server_binary, "--listen", "127.0.0.1:0", "--managed",
        "--endpoint-id", servers[i].endpoint_id, "--mcast-group",
        config_.mcast_group, "--mcast-port",
        std::to_string(config_.mcast_port)};
    if (prefix.empty()) {
      argv = raftd_args;
    } else {
      std::string joined;
      for (const auto& a : raftd_args) joined += a + " ";
      argv = {"/bin/sh", "-c", prefix + " " + joined};
    }
    servers[i].process = ChildProcess::spawn(
        argv, config_.out_dir + "/logs/" + run_token + "-s" +
                  std::to_string(i) + ".log");
  }

  // Step 3: await detection of every expected server, then configure them.
  bool all_found = tracker.await_peers(
      static_cast<std::size_t>(config_.servers), config_.discovery_timeout_ms,
      [&](const std::string& id, const PeerInfo&) {
        return expected_ids.contains(id);
      });
  if (!all_found)
    throw std::runtime_error("startup timeout: servers were not discovered");
  PeerTable table = tracker.snapshot();
  for (auto& server : servers)
    server.address = table.peers().at(server.endpoint_id).service_address;

  Transport control("manager:" + run_token);
  int leader_index = 0;
  servers[leader_index].designated_role = "leader";
  for (int i = 1; i < config_.servers; ++i)
    servers[i].designated_role = "follower";

  int max_timeout = config_.election_timeout_min_ms;
  for (int i = 0; i < config_.servers; ++i) {
    AssignConfigReq assign;
    assign.role = servers[i].designated_role;
    assign.term = 1;
    assign.voted_for = servers[leader_index].address;
    assign.current_leader = servers[leader_index].address;
    for (int j = 0; j < config_.servers; ++j)
      if (j != i) assign.peers.push_back(servers[j].address);
    int span =
        config_.election_timeout_max_ms - config_.election_timeout_min_ms;
    assign.election_timeout_ms =
        config_.election_timeout_min_ms +
        (span > 0 ? static_cast<int>(rng() % static_cast<std::uint64_t>(span + 1))
                  : 0);
    max_timeout = std::max(max_timeout, assign.election_timeout_ms);
    assign.election_timeout_min_ms = config_.election_timeout_min_ms;
    assign.election_timeout_max_ms = config_.election_timeout_max_ms;
    assign.heartbeat_mode = config_.heartbeat_mode;
    auto r = control.call(servers[i].address, assign, 5000);
    if (!r.ok() || !r.response->as<AssignConfigResp>().ok)
      throw std::runtime_error("assign failed for " + servers[i].endpoint_id +
                               ": " + r.error_detail);
  }
  for (const auto& server : servers) {
    auto r = control.call(server.address, StartReq{}, 5000);
    if (!r.ok()) throw std::runtime_error("start failed: " + r.error_detail);
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(2 * max_timeout));

  // Step 4: client sessions (one thread each), subscribed via the manager
  // endpoint, then the workload starts everywhere.
  std::vector<std::string> addresses;
  for (const auto& s : servers) addresses.push_back(s.address);
  std::vector<std::unique_ptr<ClientSession>> sessions;
  for (int c = 0; c < config_.clients; ++c) {
    ClientOptions copt;
    copt.client_id = run_token + "-c" + std::to_string(c);
    copt.rng_seed = rng();
    copt.max_attempts = 30;  // survives repeated kills within one workload
    sessions.push_back(std::make_unique<ClientSession>(copt));
    sessions.back()->seed(addresses, servers[leader_index].address);
  }

  std::int64_t workload_start_ms = steady_now_ms();
  std::vector<WorkloadReport> client_reports(config_.clients);
  std::vector<std::thread> client_threads;
  client_threads.reserve(config_.clients);
  for (int c = 0; c < config_.clients; ++c) {
    client_threads.emplace_back([&, c] {
      client_reports[c] = sessions[c]->run_workload(
          config_.iterations, config_.keyspace, manager_endpoint.address());
    });
  }

  // Failure injection on the configured timeline.
  auto kill_one = [&](int index, std::int64_t offset_ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(
        offset_ms - (steady_now_ms() - workload_start_ms)));
    KillRecord kr;
    kr.target = servers[index].endpoint_id;
    kr.role = servers[index].designated_role;
    kr.configured_offset_ms = offset_ms;
    bool was_running = servers[index].process.kill_abrupt();
    kr.at_steady_ms = steady_now_ms();
    kr.actual_offset_ms = kr.at_steady_ms - workload_start_ms;
    servers[index].killed = true;
    if (!was_running)
      report.anomalies.push_back("kill target already dead: " + kr.target);
    report.kills.push_back(kr);
  };
  std::thread killer([&] {
    switch (config_.scenario) {
      case Scenario::E0:
        break;
      case Scenario::F1:
        kill_one(1, 500);
        break;
      case Scenario::L1:
        kill_one(leader_index, 500);
        break;
      case Scenario::F2:
        kill_one(1, 500);
        kill_one(2, 1000);
        break;
      case Scenario::F1L1:
        kill_one(1, 500);
        kill_one(leader_index, 1000);
        break;
    }
  });

  // Step 5: wait for every client's end-of-workload notification.
  {
    std::unique_lock lock(eow_mu);
    bool all = eow_cv.wait_for(
        lock, std::chrono::milliseconds(config_.workload_deadline_ms), [&] {
          return eow_times.size() == static_cast<std::size_t>(config_.clients);
        });
    if (!all) {
      report.partial = true;
      report.anomalies.push_back("missing end-of-workload notifications");
    }
  }
  for (auto& t : client_threads) t.join();
  killer.join();
  std::int64_t last_eow_ms = workload_start_ms;
  {
    std::lock_guard lock(eow_mu);
    for (const auto& [id, at] : eow_times) last_eow_ms = std::max(last_eow_ms, at);
  }
  report.wall_seconds =
      static_cast<double>(last_eow_ms - workload_start_ms) / 1000.0;
  for (const auto& r : client_reports)
    if (r.partial) report.partial = true;
  for (const auto& k : report.kills)
    if (k.at_steady_ms > last_eow_ms)
      report.anomalies.push_back("kill landed after workload end: " + k.target);

  // Post-run: a manager-issued sentinel command forces the (possibly fresh)
  // leader to commit a current-term entry, which carries every older entry's
  // commit with it; survivors then converge and get audited.
  std::vector<int> survivors;
  for (int i = 0; i < config_.servers; ++i)
    if (!servers[i].killed) survivors.push_back(i);
  std::vector<std::string> survivor_addresses;
  for (int i : survivors) survivor_addresses.push_back(servers[i].address);

  ClientOptions sentinel_opt;
  sentinel_opt.client_id = run_token + "-sentinel";
  sentinel_opt.rng_seed = rng();
  sentinel_opt.max_attempts = 30;
  ClientSession sentinel(sentinel_opt);
  sentinel.seed(survivor_addresses, survivor_addresses[0]);
  try {
    sentinel.insert_command("PUT", {"bench-sentinel", run_token});
  } catch (const RetriesExhausted&) {
    report.anomalies.push_back("sentinel command never committed");
  }

  std::map<int, DumpResp> dumps;
  auto refresh_dumps = [&] {
    dumps.clear();
    for (int i : survivors) {
      auto r = control.call(servers[i].address, DumpReq{}, 5000);
      if (r.ok() && r.response->is<DumpResp>())
        dumps[i] = r.response->as<DumpResp>();
    }
  };
  auto converged = [&] {
    if (dumps.size() != survivors.size()) return false;
    bool has_leader = false;
    LogIndex max_commit = 0;
    for (const auto& [i, d] : dumps) {
      if (d.role == "Leader") has_leader = true;
      max_commit = std::max(max_commit, d.commit_index);
    }
    if (!has_leader) return false;
    for (const auto& [i, d] : dumps)
      if (d.last_applied != max_commit || d.commit_index != max_commit)
        return false;
    return true;
  };
  for (int tries = 0; tries < 100; ++tries) {
    refresh_dumps();
    if (converged()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  {
    std::vector<std::set<std::string>> issued_per_client;
    for (const auto& session : sessions) {
      std::set<std::string> uids(session->issued_uids().begin(),
                                 session->issued_uids().end());
      issued_per_client.push_back(std::move(uids));
    }
    issued_per_client.emplace_back(sentinel.issued_uids().begin(),
                                   sentinel.issued_uids().end());
    audit_run(report, issued_per_client, dumps);
  }

  // 1L-family: availability gap around the leader kill, over the union of
  // the survivors' commit timelines.
  std::int64_t leader_kill_at = -1;
  for (const auto& k : report.kills)
    if (k.role == "leader") leader_kill_at = k.at_steady_ms;
  if (leader_kill_at >= 0) {
    std::int64_t last_pre = -1, first_post = -1;
    for (const auto& [i, d] : dumps) {
      for (const auto& [index, at] : d.commit_times_ms) {
        if (at <= leader_kill_at)
          last_pre = std::max(last_pre, at);
        else if (first_post < 0 || at < first_post)
          first_post = at;
      }
    }
    if (last_pre >= 0 && first_post >= 0)
      report.unavailability_window_ms = first_post - last_pre;
    else
      report.anomalies.push_back("no commits on both sides of the leader kill");
  }

  // Step 6-7: everyone writes its statistics, then terminates.
  for (int i : survivors) {
    WriteStatsReq ws;
    ws.path = config_.out_dir + "/stats/" + run_token + "-s" +
              std::to_string(i) + ".json";
    control.call(servers[i].address, ws, 5000);
  }
  {
    nlohmann::json j;
    for (int c = 0; c < config_.clients; ++c)
      j.push_back({{"client", sessions[c]->issued_uids().size() > 0
                                  ? "c" + std::to_string(c)
                                  : "c" + std::to_string(c)},
                   {"iterations", client_reports[c].iterations_completed},
                   {"partial", client_reports[c].partial},
                   {"reconnects", sessions[c]->reconnects()}});
    std::ofstream out(config_.out_dir + "/stats/" + run_token + "-clients.json");
    out << j.dump(2) << "\n";
  }
  for (int i : survivors) {
    auto r = control.call(servers[i].address, ShutdownReq{}, 2000);
    (void)r;
    servers[i].process.terminate(3000);
  }

  // Stats over the run.
  std::vector<std::vector<double>> samples;
  for (const auto& r : client_reports) samples.push_back(r.latencies_ms);
  report.stats =
      compute_stats(config_.clients, config_.iterations, samples,
                    report.wall_seconds);
  return report;
}

/// Exactly-once audit: the union of client-issued uids must equal the set of
/// uids in the surviving leader's committed log (no duplicates), and every
/// survivor's state machine must be byte-identical.
inline void audit_run(
    RunReport& report,
    const std::vector<std::set<std::string>>& issued_per_client,
    const std::map<int, DumpResp>& dumps) {
  report.audit_ok = false;
  if (dumps.empty()) {
    report.audit_detail = "no survivor dumps collected";
    return;
  }
  // Surviving leader: highest term wins, Leader role preferred.
  const DumpResp* leader = nullptr;
  for (const auto& [i, d] : dumps) {
    if (d.role != "Leader") continue;
    if (!leader || d.current_term > leader->current_term) leader = &d;
  }
  if (!leader) {
    report.audit_detail = "no surviving leader";
    return;
  }
  report.survivors_leader = leader->id;

  std::set<std::string> issued;
  std::size_t issued_total = 0;
  for (const auto& uids : issued_per_client) {
    issued_total += uids.size();
    issued.insert(uids.begin(), uids.end());
  }
  report.issued_uids = issued_total;
  if (issued.size() != issued_total) {
    report.audit_detail = "client uid collision";
    return;
  }

  std::map<std::string, int> committed_count;
  for (LogIndex i = 1; i <= leader->commit_index && i <= leader->log.size(); ++i)
    committed_count[leader->log[i - 1].uid] += 1;
  report.committed_entries = committed_count.size();
  for (const auto& [uid, count] : committed_count) {
    if (count != 1) {
      report.audit_detail = "uid committed " + std::to_string(count) +
                            " times: " + uid;
      return;
    }
    if (!issued.contains(uid)) {
      report.audit_detail = "committed uid never issued: " + uid;
      return;
    }
  }
  for (const auto& uid : issued) {
    if (!committed_count.contains(uid)) {
      report.audit_detail = "issued uid missing from committed log: " + uid;
      return;
    }
  }

  // State machine equality across survivors.
  const DumpResp* first = nullptr;
  for (const auto& [i, d] : dumps) {
    if (!first) {
      first = &d;
      continue;
    }
    if (d.kv_entries != first->kv_entries ||
        d.applied_uids != first->applied_uids) {
      report.audit_detail =
          "state machines diverge between " + first->id + " and " + d.id;
      return;
    }
  }
  report.audit_ok = true;
  report.audit_detail = "ok";
}

}  // namespace raftdev

#endif  // RAFTDEV_HARNESS_HPP_
