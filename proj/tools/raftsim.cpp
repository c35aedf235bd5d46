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

// Deterministic cluster simulator CLI: runs seeded fault schedules (or a
// schedule file) against an in-process cluster, checks the safety invariants
// on every step and optionally exports the full event trace.

#include <cstdio>
#include <fstream>

#include <CLI11.hpp>

#include "raftdev/simnet.hpp"

namespace {

int run_one(int servers, const raftdev::sim::Schedule& schedule,
            const std::string& trace_out, bool quiet) {
  bool want_trace = !trace_out.empty();
  raftdev::sim::SimResult result =
      raftdev::sim::run_schedule(servers, schedule, want_trace);
  if (want_trace) {
    std::ofstream out(trace_out);
    if (!out) {
      std::fprintf(stderr, "raftsim: cannot write %s\n", trace_out.c_str());
      return 1;
    }
    out << raftdev::sim::trace_to_ndjson(result.trace, servers);
  }
  int leaders = 0, alive = 0;
  raftdev::LogIndex max_commit = 0;
  for (const auto& rep : result.replicas) {
    if (!rep.alive) continue;
    ++alive;
    if (rep.state.role == raftdev::Role::Leader) ++leaders;
    max_commit = std::max(max_commit, rep.state.commit_index);
  }
  int completed = 0;
  for (const auto& op : result.client_ops)
    if (op.completed) ++completed;
  if (!quiet)
    std::printf(
        "seed=%llu events=%llu alive=%d leaders=%d maxCommit=%llu "
        "ops=%zu completed=%d violations=%zu\n",
        static_cast<unsigned long long>(schedule.seed),
        static_cast<unsigned long long>(result.event_count), alive, leaders,
        static_cast<unsigned long long>(max_commit), result.client_ops.size(),
        completed, result.violations.size());
  for (const auto& v : result.violations)
    std::fprintf(stderr, "VIOLATION %s at t=%lld: %s\n", v.invariant.c_str(),
                 static_cast<long long>(v.time_ms), v.detail.c_str());
  return result.violations.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raftsim - deterministic fault-schedule simulator"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int servers = 5;
  std::string schedule_file, trace_out;
  std::int64_t duration_ms = 0;
  double drop_rate = -1.0;

  auto* run = app.add_subcommand("run", "simulate one schedule");
  run->add_option("--seed", seed, "schedule seed (random schedule family)");
  run->add_option("--servers", servers, "cluster size");
  run->add_option("--schedule", schedule_file, "JSON schedule file");
  run->add_option("--trace-out", trace_out,
                  "write the event trace as newline-delimited JSON");
  run->add_option("--duration-ms", duration_ms, "override schedule duration");
  run->add_option("--drop-rate", drop_rate, "override message drop rate");

  std::uint64_t first = 1, count = 1000;
  auto* soak = app.add_subcommand("soak", "run many seeded schedules");
  soak->add_option("--servers", servers, "cluster size");
  soak->add_option("--first-seed", first, "first seed");
  soak->add_option("--seeds", count, "number of seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      raftdev::sim::Schedule schedule;
      if (!schedule_file.empty()) {
        std::ifstream in(schedule_file);
        if (!in) {
          std::fprintf(stderr, "raftsim: cannot read %s\n",
                       schedule_file.c_str());
          return 1;
        }
        schedule =
            raftdev::sim::schedule_from_json(nlohmann::json::parse(in));
      } else {
        schedule = raftdev::sim::random_schedule(seed, servers);
      }
      if (duration_ms > 0) schedule.duration_ms = duration_ms;
      if (drop_rate >= 0.0) schedule.drop_rate = drop_rate;
      return run_one(servers, schedule, trace_out, false);
    }
    std::uint64_t bad = 0;
    for (std::uint64_t s = first; s < first + count; ++s) {
      auto schedule = raftdev::sim::random_schedule(s, servers);
      if (run_one(servers, schedule, "", true) != 0) ++bad;
    }
    std::printf("soak: %llu seeds, %llu with violations\n",
                static_cast<unsigned long long>(count),
                static_cast<unsigned long long>(bad));
    return bad == 0 ? 0 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "raftsim: %s\n", e.what());
    return 1;
  }
}
