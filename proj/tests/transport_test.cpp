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

#include "raftdev/transport.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <thread>

namespace raftdev {
namespace {

using namespace std::chrono;

std::optional<Message> echo_handler(const Message& req) {
  if (req.is<InsertCommandReq>()) {
    const auto& body = req.as<InsertCommandReq>();
    return Message{req.msg_id, "echo",
                   InsertCommandResp{true, body.command, ""}};
  }
  if (req.is<EndOfWorkload>()) return std::nullopt;  // one-way
  return Message{req.msg_id, "echo", ShutdownResp{true}};
}

TEST(Transport, CallRoundTripAgainstEchoServer) {
  MessageServer server("127.0.0.1:0", echo_handler);
  Transport client("tester");
  auto result = client.call(server.address(),
                            InsertCommandReq{"u1", "PING", {}}, 1000);
  ASSERT_TRUE(result.ok()) << result.error_detail;
  EXPECT_EQ(result.response->as<InsertCommandResp>().result, "PING");
}

TEST(Transport, UnboundPortGivesConnectionError) {
  Transport client("tester");
  auto result = client.call("127.0.0.1:1", ShutdownReq{}, 500);
  EXPECT_FALSE(result.ok());
  EXPECT_EQ(result.error, CallErrorKind::Connection);
}

TEST(Transport, SilentEndpointTimesOutNearDeadline) {
  // A server that never answers.
  MessageServer server("127.0.0.1:0",
                       [](const Message&) { return std::nullopt; });
  Transport client("tester");
  auto start = steady_clock::now();
  auto result = client.call(server.address(), ShutdownReq{}, 100);
  auto elapsed = duration_cast<milliseconds>(steady_clock::now() - start).count();
  EXPECT_FALSE(result.ok());
  EXPECT_EQ(result.error, CallErrorKind::Timeout);
  EXPECT_GE(elapsed, 80);
  EXPECT_LE(elapsed, 400) << "timeout fired far from the requested deadline";
}

TEST(Transport, BroadcastDeliversOutcomesAsTheyArrive) {
  // One fast responder, one slow responder: total duration tracks the max,
  // not the sum, and the fast outcome arrives first.
  MessageServer fast("127.0.0.1:0", echo_handler);
  MessageServer slow("127.0.0.1:0", [](const Message& req) {
    std::this_thread::sleep_for(120ms);
    return std::optional<Message>(Message{req.msg_id, "slow", ShutdownResp{true}});
  });
  Transport client("tester");
  // warm both connections so measured time is the call itself
  client.call(fast.address(), ShutdownReq{}, 1000);
  client.call(slow.address(), ShutdownReq{}, 1000);

  auto start = steady_clock::now();
  auto results = client.broadcast_gather({fast.address(), slow.address()},
                                         ShutdownReq{}, 1000);
  auto elapsed = duration_cast<milliseconds>(steady_clock::now() - start).count();
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].first, fast.address()) << "fast outcome must arrive first";
  EXPECT_TRUE(results[0].second.ok());
  EXPECT_TRUE(results[1].second.ok());
  EXPECT_LT(elapsed, 1000) << "fan-out must not serialize the calls";
}

TEST(Transport, BroadcastSurvivesDeadTarget) {
  MessageServer live("127.0.0.1:0", echo_handler);
  Transport client("tester");
  auto results =
      client.broadcast_gather({live.address(), "127.0.0.1:1"}, ShutdownReq{}, 500);
  ASSERT_EQ(results.size(), 2u);
  int ok = 0, failed = 0;
  for (const auto& [target, r] : results) r.ok() ? ++ok : ++failed;
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(failed, 1);
}

TEST(Transport, EmptyBroadcastRejected) {
  Transport client("tester");
  EXPECT_THROW(client.broadcast_gather({}, ShutdownReq{}, 100),
               std::invalid_argument);
}

TEST(Transport, ConcurrentCallsCorrelateByMsgId) {
  // The handler echoes the command back; 8 threads hammer one connection and
  // every caller must get its own value.
  MessageServer server("127.0.0.1:0", echo_handler);
  Transport client("tester");
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        std::string tag = "t" + std::to_string(t) + "-" + std::to_string(i);
        auto r = client.call(server.address(),
                             InsertCommandReq{"u", tag, {}}, 2000);
        if (!r.ok() || r.response->as<InsertCommandResp>().result != tag)
          failures.fetch_add(1);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(failures.load(), 0);
}

TEST(Transport, ReconnectsLazilyAfterServerRestart) {
  Transport client("tester");
  std::string address;
  {
    MessageServer server("127.0.0.1:0", echo_handler);
    address = server.address();
    ASSERT_TRUE(client.call(address, ShutdownReq{}, 1000).ok());
  }
  // server gone: the cached connection fails fast
  auto dead = client.call(address, ShutdownReq{}, 1000);
  EXPECT_FALSE(dead.ok());
  // a fresh server on the same port becomes reachable once the reconnect
  // backoff window lapses
  MessageServer revived(address, echo_handler);
  client.call(address, ShutdownReq{}, 1000);  // may still be backed off
  std::this_thread::sleep_for(250ms);
  auto back = client.call(address, ShutdownReq{}, 1000);
  EXPECT_TRUE(back.ok()) << back.error_detail;
}

TEST(Transport, NotifyIsFireAndForget) {
  std::atomic<int> seen{0};
  MessageServer server("127.0.0.1:0", [&](const Message& req) {
    if (req.is<EndOfWorkload>()) seen.fetch_add(1);
    return std::optional<Message>();
  });
  Transport client("tester");
  ASSERT_TRUE(client.notify(server.address(), EndOfWorkload{"c1", 120, false}));
  for (int i = 0; i < 100 && seen.load() == 0; ++i)
    std::this_thread::sleep_for(10ms);
  EXPECT_EQ(seen.load(), 1);
}

TEST(MessageServer, MalformedFrameCountsAndDropsConnection) {
  MessageServer server("127.0.0.1:0", echo_handler);
  std::string error;
  auto fd = net::tcp_connect(server.address(), 500, &error);
  ASSERT_TRUE(fd.valid()) << error;
  std::string garbage = "this is not json\n";
  ASSERT_TRUE(net::write_all(fd.get(), garbage.data(), garbage.size()));
  net::LineReader reader(fd.get());
  EXPECT_FALSE(reader.next().has_value()) << "server should close the connection";
  EXPECT_EQ(server.malformed_frames(), 1u);
}

}  // namespace
}  // namespace raftdev
